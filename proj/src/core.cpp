#include "brsim/core.hpp"

#include <algorithm>
#include <stdexcept>

namespace brsim {

Tokens step_workload(Tokens prefill_len, Step step_in_lifetime) {
  if (prefill_len < 1) throw std::invalid_argument("step_workload: prefill_len must be >= 1");
  if (step_in_lifetime < 1) throw std::invalid_argument("step_workload: lifetime step must be >= 1");
  return prefill_len + step_in_lifetime - 1;
}

Tokens instantaneous_load(const WorkerState& worker, Step k) {
  Tokens total = 0;
  for (const ActiveEntry& e : worker.active) {
    if (e.assign_step > k) throw std::invalid_argument("instantaneous_load: entry assigned after step k");
    total += step_workload(e.prefill_len, k - e.assign_step + 1);
  }
  return total;
}

std::vector<Tokens> worker_loads(const ClusterState& state) {
  std::vector<Tokens> loads;
  loads.reserve(state.workers.size());
  for (const WorkerState& w : state.workers) loads.push_back(instantaneous_load(w, state.step));
  return loads;
}

Tokens imbalance_total(std::span<const Tokens> loads) {
  if (loads.empty()) throw std::invalid_argument("imbalance_total: no workers");
  Tokens max = loads[0];
  Tokens sum = 0;
  for (Tokens v : loads) {
    max = std::max(max, v);
    sum += v;
  }
  return static_cast<Tokens>(loads.size()) * max - sum;
}

Tokens imbalance_spread(std::span<const Tokens> loads) {
  if (loads.empty()) throw std::invalid_argument("imbalance_spread: no workers");
  auto [lo, hi] = std::minmax_element(loads.begin(), loads.end());
  return *hi - *lo;
}

}  // namespace brsim
