#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "brsim/core.hpp"
#include "brsim/predictor.hpp"
#include "brsim/scoring.hpp"

namespace brsim {

enum class RouterKind { Random, RoundRobin, P2C, Jsq, Br0, Brh };

const char* router_kind_name(RouterKind kind);
RouterKind parse_router_kind(std::string_view name);

struct RouterParams {
  RouterKind kind = RouterKind::Jsq;
  int s_greedy = -1;  // greedy-stage free-slot threshold; -1 = number of workers
  int r_max = 4;      // Stage-2 candidate window size
  ScoreParams score;
  PredictorConfig predictor;
  std::optional<std::uint64_t> rng_seed;
  bool p2c_compare_count = false;  // default comparison is instantaneous load
};

// Per-worker admission lists for one step. A request id appears at most
// once across all workers, and every admission fits in free capacity.
struct Dispatch {
  std::vector<std::vector<RequestId>> admissions;

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& a : admissions) n += a.size();
    return n;
  }
  bool empty() const { return total() == 0; }
};

// Baselines place each waiting request in FIFO order, immediately, while
// capacity lasts. None of them reads prefill or output lengths except
// through the load comparisons named below.
Dispatch route_random(const ClusterState& state, std::mt19937_64& rng);
Dispatch route_round_robin(const ClusterState& state, int& cursor);
Dispatch route_p2c(const ClusterState& state, std::mt19937_64& rng, bool compare_count = false);
Dispatch route_jsq(const ClusterState& state);

// Two-stage margin router on instantaneous loads.
Dispatch br0_dispatch(const ClusterState& state, const RouterParams& params);

// Two-stage margin router on the discounted-horizon projection. Requires
// current prediction state on every active entry when score.horizon >= 1;
// with horizon 0 it degenerates to br0_dispatch decisions exactly.
Dispatch brh_dispatch(const ClusterState& state, const RouterParams& params);

// Owns the mutable policy state (RNG stream, round-robin cursor) across a
// run and dispatches on kind.
class Router {
 public:
  Router(const RouterParams& params, std::uint64_t fallback_seed);

  Dispatch route(const ClusterState& state);
  const RouterParams& params() const { return params_; }

 private:
  RouterParams params_;
  std::mt19937_64 rng_;
  int cursor_ = 0;
};

}  // namespace brsim
