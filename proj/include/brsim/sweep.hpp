#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "brsim/simulator.hpp"
#include "brsim/synthetic.hpp"

namespace brsim {

enum class SweepMode {
  Cross,  // vary one axis at a time around the base config; duplicates merge
  Grid,   // cartesian product of all non-empty axes
};

// Each non-empty list becomes one swept dimension; empty lists keep the base
// config's value.
struct SweepAxes {
  std::vector<int> num_workers;
  std::vector<double> beta;
  std::vector<double> gamma;
  std::vector<Step> horizon;
  std::vector<RouterKind> router;
  std::vector<PredictorKind> predictor;
  std::vector<std::uint64_t> seed;

  bool empty() const {
    return num_workers.empty() && beta.empty() && gamma.empty() && horizon.empty() &&
           router.empty() && predictor.empty() && seed.empty();
  }
};

struct SweepSpec {
  SimConfig base;
  SweepAxes axes;
  SweepMode mode = SweepMode::Cross;

  // Workload: either a fixed trace shared by every cell, or a generator spec
  // re-run per cell (required when the arrival rate must track num_workers).
  std::vector<Request> trace;
  std::optional<SynthSpec> synth;
  bool scale_rate_with_workers = false;

  int threads = 0;  // 0 = hardware concurrency
  std::size_t max_cells = 4096;
};

struct SweepCell {
  SimConfig config;
  std::string label;  // "beta=48,gamma=0.9" — one entry per swept axis
};

struct SweepCellResult {
  SweepCell cell;
  RunSummary summary;  // meaningful only when ok
  bool ok = false;
  std::string error;
};

struct SweepReport {
  std::vector<SweepCellResult> cells;
};

// Deterministic cell list: axis order (num_workers, router, predictor,
// horizon, beta, gamma, seed), values in listed order, duplicates removed.
std::vector<SweepCell> expand_cells(const SweepSpec& spec);

// Runs every cell (concurrently up to spec.threads); a failed cell carries
// its error message and never aborts the others. Result order matches
// expand_cells.
SweepReport run_sweep(const SweepSpec& spec);

}  // namespace brsim
