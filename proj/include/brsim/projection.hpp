#pragma once

#include <span>
#include <vector>

#include "brsim/core.hpp"

namespace brsim {

// Projected per-worker loads over offsets h = 0..H, the fleet envelope
// (column max), and per-worker margins (envelope - load, always >= 0).
// Offset 0 is the instantaneous load; an entry with cached contribution
// c_hat adds prefill + age + h - 1 at offsets 1..floor(c_hat).
class HorizonProjection {
 public:
  HorizonProjection() = default;
  HorizonProjection(int num_workers, Step horizon);

  int num_workers() const { return num_workers_; }
  Step horizon() const { return horizon_; }

  Tokens load(int worker, Step offset) const { return loads_[index(worker, offset)]; }
  Tokens envelope(Step offset) const { return envelope_[static_cast<std::size_t>(offset)]; }
  std::span<const Tokens> margins(int worker) const;
  std::span<const Tokens> load_row(int worker) const;
  Tokens min_margin(int worker) const;

  // Add a constant delta at every offset of one worker, maintaining the
  // envelope and all margins.
  void add_constant(int worker, Tokens delta);

  void set_load(int worker, Step offset, Tokens value) { loads_[index(worker, offset)] = value; }
  // Recompute envelope and margins from the load matrix.
  void finalize();

 private:
  std::size_t index(int worker, Step offset) const {
    return static_cast<std::size_t>(worker) * static_cast<std::size_t>(horizon_ + 1) +
           static_cast<std::size_t>(offset);
  }

  int num_workers_ = 0;
  Step horizon_ = 0;
  std::vector<Tokens> loads_;
  std::vector<Tokens> envelope_;
  std::vector<Tokens> margins_;
};

// Reference construction: per offset, sum contributions entry by entry.
// Requires prediction state on every active entry when horizon >= 1.
HorizonProjection project_naive(std::span<const WorkerState> workers, Step horizon);

// Same result via per-worker suffix aggregates over floor(c_hat) buckets,
// O(B + H) per worker instead of O(B * H).
HorizonProjection project_fast(std::span<const WorkerState> workers, Step horizon);

// Functional form of the incremental update used during a dispatch round.
HorizonProjection apply_admission(HorizonProjection projection, int worker, Tokens delta_s);

}  // namespace brsim
