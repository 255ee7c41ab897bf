#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "brsim/prediction_state.hpp"

namespace brsim {

using RequestId = std::int64_t;
using Step = std::int64_t;
using Tokens = std::int64_t;

// One trace entry. output_len is ground truth: the simulator uses it to
// retire requests and the oracle predictor may read it; routing policies
// never see it.
struct Request {
  RequestId id = 0;
  Step arrival_step = 0;
  Tokens prefill_len = 1;
  Tokens output_len = 1;
  std::optional<std::uint64_t> prompt_key;
};

// A request resident on a worker. age counts completed decode steps,
// so age == current_step - assign_step at the start of each step.
struct ActiveEntry {
  RequestId request_id = 0;
  Tokens prefill_len = 1;
  Step assign_step = 0;
  Step age = 0;
  std::optional<std::uint64_t> prompt_key;
  std::optional<PredictionState> prediction;
};

struct WorkerState {
  int worker_id = 0;
  int capacity = 0;
  std::vector<ActiveEntry> active;

  int free_slots() const { return capacity - static_cast<int>(active.size()); }
};

// Waiting requests stay FIFO-ordered by (arrival_step, id).
struct ClusterState {
  Step step = 0;
  std::vector<WorkerState> workers;
  std::vector<Request> waiting;
};

// KV footprint of a request at the given 1-indexed lifetime step:
// prefill plus the tokens decoded so far.
Tokens step_workload(Tokens prefill_len, Step step_in_lifetime);

// Sum of per-request workloads on a worker at step k.
Tokens instantaneous_load(const WorkerState& worker, Step k);

std::vector<Tokens> worker_loads(const ClusterState& state);

// Total imbalance: num_workers * max - sum. Zero iff perfectly level.
Tokens imbalance_total(std::span<const Tokens> loads);

// Spread: max - min.
Tokens imbalance_spread(std::span<const Tokens> loads);

}  // namespace brsim
