#include "brsim/simulator.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace brsim {

double step_time(Tokens max_load, double a, double b) {
  if (max_load < 0) throw std::invalid_argument("step_time: negative load");
  return a * static_cast<double>(max_load) + b;
}

RunSummary collect_metrics(std::span<const StepRecord> records) {
  if (records.empty()) throw std::invalid_argument("collect_metrics: no records");
  RunSummary s;
  std::int64_t busy = 0;
  double spread_sum = 0.0;
  double total_sum = 0.0;
  std::int64_t active = 0;
  for (const StepRecord& r : records) {
    active += r.admissions;
    s.total_output_tokens += active;  // every active request decodes one token
    s.completions += r.departures;
    const bool idle = std::all_of(r.loads.begin(), r.loads.end(), [](Tokens l) { return l == 0; });
    if (!idle) {
      busy += 1;
      spread_sum += static_cast<double>(r.imbalance_spread);
      total_sum += static_cast<double>(r.imbalance_total);
      s.total_time_ms += r.step_time_ms;
    }
    active -= r.departures;
  }
  if (busy > 0) {
    s.avg_imbalance_spread = spread_sum / static_cast<double>(busy);
    s.avg_imbalance_total = total_sum / static_cast<double>(busy);
  }
  if (s.total_time_ms > 0.0) {
    s.throughput_proxy = static_cast<double>(s.total_output_tokens) / (s.total_time_ms / 1000.0);
  }
  return s;
}

namespace {

void apply_dispatch(ClusterState& state, const Dispatch& d, const std::vector<Request>& waiting_before,
                    PredictionService* predictions) {
  if (d.admissions.size() != state.workers.size()) {
    throw std::logic_error("run_trace: dispatch worker count mismatch");
  }
  if (d.empty()) return;
  std::unordered_map<RequestId, const Request*> waiting_by_id;
  waiting_by_id.reserve(waiting_before.size());
  for (const Request& r : waiting_before) waiting_by_id.emplace(r.id, &r);

  std::unordered_set<RequestId> admitted;
  admitted.reserve(d.total());
  for (std::size_t g = 0; g < d.admissions.size(); ++g) {
    WorkerState& w = state.workers[g];
    if (static_cast<int>(d.admissions[g].size()) > w.free_slots()) {
      throw std::logic_error("run_trace: dispatch exceeds worker capacity");
    }
    for (RequestId id : d.admissions[g]) {
      if (!admitted.insert(id).second) {
        throw std::logic_error("run_trace: request admitted to two workers");
      }
      auto it = waiting_by_id.find(id);
      if (it == waiting_by_id.end()) {
        throw std::logic_error("run_trace: admitted request not in waiting pool");
      }
      const Request& r = *it->second;
      ActiveEntry entry;
      entry.request_id = r.id;
      entry.prefill_len = r.prefill_len;
      entry.assign_step = state.step;
      entry.age = 0;
      entry.prompt_key = r.prompt_key;
      w.active.push_back(std::move(entry));
      if (predictions != nullptr) predictions->on_admit(w.active.back());
    }
  }
  std::erase_if(state.waiting, [&](const Request& r) { return admitted.contains(r.id); });
}

}  // namespace

RunResult run_trace(std::vector<Request> trace, const SimConfig& config,
                    const KeyedOutputHistory* corpus, const StepObserver& observer,
                    const PredictionService::Observer& prediction_observer) {
  if (config.num_workers < 1) throw std::invalid_argument("run_trace: need at least one worker");
  if (config.capacity < 1) throw std::invalid_argument("run_trace: capacity must be >= 1");
  for (const Request& r : trace) {
    if (r.prefill_len < 1 || r.output_len < 1 || r.arrival_step < 0) {
      throw std::invalid_argument("run_trace: invalid trace record");
    }
  }
  std::sort(trace.begin(), trace.end(), [](const Request& a, const Request& b) {
    if (a.arrival_step != b.arrival_step) return a.arrival_step < b.arrival_step;
    return a.id < b.id;
  });
  std::unordered_map<RequestId, Tokens> output_of;
  output_of.reserve(trace.size());
  for (const Request& r : trace) {
    if (!output_of.emplace(r.id, r.output_len).second) {
      throw std::invalid_argument("run_trace: duplicate request id");
    }
  }

  // Predictions are maintained only for horizon routing.
  const bool wants_predictions =
      config.router.kind == RouterKind::Brh && config.router.score.horizon >= 1;
  KeyedOutputHistory fitted;
  std::optional<PredictionService> predictions;
  if (wants_predictions) {
    const KeyedOutputHistory* train = corpus;
    if (config.router.predictor.kind != PredictorKind::Oracle && train == nullptr) {
      if (config.train_fraction <= 0.0 || config.train_fraction > 1.0) {
        throw std::invalid_argument("run_trace: train_fraction outside (0, 1]");
      }
      const std::size_t n =
          static_cast<std::size_t>(config.train_fraction * static_cast<double>(trace.size()));
      if (n == 0) throw std::invalid_argument("run_trace: training prefix is empty");
      fitted = KeyedOutputHistory::fit(std::span<const Request>(trace.data(), n));
      train = &fitted;
    }
    predictions.emplace(config.router.predictor, config.router.score.horizon, train,
                        [&output_of](RequestId id) { return output_of.at(id); });
    if (prediction_observer) predictions->set_observer(prediction_observer);
  }

  Router router(config.router, config.seed);
  ClusterState state;
  state.workers.resize(static_cast<std::size_t>(config.num_workers));
  for (int g = 0; g < config.num_workers; ++g) {
    state.workers[static_cast<std::size_t>(g)].worker_id = g;
    state.workers[static_cast<std::size_t>(g)].capacity = config.capacity;
  }

  RunResult result;
  std::size_t next_arrival = 0;
  std::int64_t completions = 0;

  while (completions < static_cast<std::int64_t>(trace.size())) {
    if (state.step >= config.max_steps) {
      result.summary.hit_step_cap = true;
      break;
    }
    while (next_arrival < trace.size() && trace[next_arrival].arrival_step <= state.step) {
      state.waiting.push_back(trace[next_arrival]);
      ++next_arrival;
    }

    const Dispatch dispatch = router.route(state);
    apply_dispatch(state, dispatch, state.waiting, predictions ? &*predictions : nullptr);

    StepRecord rec;
    rec.k = state.step;
    rec.loads = worker_loads(state);
    rec.imbalance_total = imbalance_total(rec.loads);
    rec.imbalance_spread = imbalance_spread(rec.loads);
    rec.admissions = static_cast<int>(dispatch.total());
    const Tokens max_load = *std::max_element(rec.loads.begin(), rec.loads.end());
    rec.step_time_ms = step_time(max_load, config.step_time_a, config.step_time_b);

    // Decode advance, departures, prediction upkeep.
    int departed = 0;
    for (WorkerState& w : state.workers) {
      for (ActiveEntry& e : w.active) e.age += 1;
      std::erase_if(w.active, [&](const ActiveEntry& e) {
        if (e.age >= output_of.at(e.request_id)) {
          result.summary.completion_steps.emplace_back(e.request_id, state.step);
          ++departed;
          return true;
        }
        return false;
      });
      if (predictions) {
        for (ActiveEntry& e : w.active) predictions->on_token(e);
      }
    }
    rec.departures = departed;
    completions += departed;

    if (observer) observer(rec, state, dispatch);
    result.records.push_back(std::move(rec));
    state.step += 1;
  }

  if (!result.records.empty()) {
    RunSummary agg = collect_metrics(result.records);
    agg.hit_step_cap = result.summary.hit_step_cap;
    agg.completion_steps = std::move(result.summary.completion_steps);
    result.summary = std::move(agg);
  }
  return result;
}

}  // namespace brsim
