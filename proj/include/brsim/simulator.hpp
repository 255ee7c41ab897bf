#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "brsim/core.hpp"
#include "brsim/predictor.hpp"
#include "brsim/routers.hpp"

namespace brsim {

struct SimConfig {
  int num_workers = 8;   // G
  int capacity = 16;     // per-worker concurrent request limit B
  RouterParams router;
  double step_time_a = 0.01;  // ms per token of max load
  double step_time_b = 50.0;  // ms fixed overhead per step
  Step max_steps = 4'000'000;
  std::uint64_t seed = 1;
  // Survival/ExactMatch corpus when none is supplied: fraction of the
  // trace, by arrival order, fitted before the run.
  double train_fraction = 0.5;
};

struct StepRecord {
  Step k = 0;
  std::vector<Tokens> loads;
  Tokens imbalance_total = 0;
  Tokens imbalance_spread = 0;
  int admissions = 0;
  int departures = 0;
  double step_time_ms = 0.0;
};

struct RunSummary {
  double avg_imbalance_spread = 0.0;
  double avg_imbalance_total = 0.0;
  Tokens total_output_tokens = 0;
  double total_time_ms = 0.0;
  double throughput_proxy = 0.0;  // output tokens per second of busy time
  std::int64_t completions = 0;
  bool hit_step_cap = false;
  std::vector<std::pair<RequestId, Step>> completion_steps;  // filled by run_trace
};

struct RunResult {
  RunSummary summary;
  std::vector<StepRecord> records;
};

// Modeled decode-step latency: linear in the slowest worker's load.
double step_time(Tokens max_load, double a, double b);

// Aggregate step records. Steps where every worker is empty are excluded
// from the averages and from busy time; decoded tokens are reconstructed
// from the admission/departure counts.
RunSummary collect_metrics(std::span<const StepRecord> records);

using StepObserver = std::function<void(const StepRecord&, const ClusterState&, const Dispatch&)>;

// Deterministic trace replay. Per step: arrivals join the FIFO waiting
// pool, the router dispatches, loads are recorded, every active request
// decodes one token, finished requests depart, and predictions are
// maintained. Output lengths are read only here and by the oracle
// predictor; routers never see them.
RunResult run_trace(std::vector<Request> trace, const SimConfig& config,
                    const KeyedOutputHistory* corpus = nullptr, const StepObserver& observer = {},
                    const PredictionService::Observer& prediction_observer = {});

}  // namespace brsim
