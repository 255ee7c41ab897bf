#include "brsim/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace brsim {

OutputHistory OutputHistory::fit(std::span<const Tokens> outputs) {
  OutputHistory h;
  h.sorted_.assign(outputs.begin(), outputs.end());
  for (Tokens o : h.sorted_) {
    if (o < 1) throw std::invalid_argument("OutputHistory: output lengths must be >= 1");
  }
  std::sort(h.sorted_.begin(), h.sorted_.end());
  h.prefix_.resize(h.sorted_.size() + 1, 0);
  for (std::size_t i = 0; i < h.sorted_.size(); ++i) h.prefix_[i + 1] = h.prefix_[i] + h.sorted_[i];
  return h;
}

std::int64_t OutputHistory::count_le(Tokens t) const {
  return std::upper_bound(sorted_.begin(), sorted_.end(), t) - sorted_.begin();
}

double OutputHistory::cdf(Tokens t) const {
  if (sorted_.empty()) throw std::logic_error("OutputHistory: cdf on empty history");
  return static_cast<double>(count_le(t)) / static_cast<double>(sorted_.size());
}

Tokens OutputHistory::sum_in(Tokens lo, Tokens hi) const {
  const std::int64_t a = count_le(lo);
  const std::int64_t b = count_le(hi);
  return prefix_[static_cast<std::size_t>(b)] - prefix_[static_cast<std::size_t>(a)];
}

std::int64_t OutputHistory::count_in(Tokens lo, Tokens hi) const {
  return count_le(hi) - count_le(lo);
}

double p_fin_survival(Step age, Step horizon, const OutputHistory& hist) {
  if (age < 0 || horizon < 1) throw std::invalid_argument("p_fin_survival: age >= 0 and horizon >= 1 required");
  if (hist.empty()) throw std::invalid_argument("p_fin_survival: empty history");
  const std::int64_t n = static_cast<std::int64_t>(hist.size());
  const std::int64_t survivors = n - hist.count_le(age);
  if (survivors == 0) return 1.0;
  const std::int64_t finishing = hist.count_in(age, age + horizon);
  return static_cast<double>(finishing) / static_cast<double>(survivors);
}

double mu_rem_survival(Step age, Step horizon, const OutputHistory& hist) {
  if (age < 0 || horizon < 1) throw std::invalid_argument("mu_rem_survival: age >= 0 and horizon >= 1 required");
  if (hist.empty()) throw std::invalid_argument("mu_rem_survival: empty history");
  const std::int64_t cnt = hist.count_in(age, age + horizon);
  if (cnt == 0) return static_cast<double>(horizon);
  const Tokens sum = hist.sum_in(age, age + horizon);
  return (static_cast<double>(sum) - static_cast<double>(cnt) * static_cast<double>(age)) /
         static_cast<double>(cnt);
}

double composite_contribution(double p_fin, double mu_rem, Step horizon) {
  if (p_fin < 0.0 || p_fin > 1.0) throw std::invalid_argument("composite_contribution: p_fin outside [0, 1]");
  if (horizon < 1) throw std::invalid_argument("composite_contribution: horizon must be >= 1");
  const double h = static_cast<double>(horizon);
  const double c = (1.0 - p_fin) * h + p_fin * mu_rem;
  return std::clamp(c, 0.0, h);
}

Tokens oracle_contribution(Tokens remaining, Step horizon) {
  if (remaining < 0 || horizon < 0) throw std::invalid_argument("oracle_contribution: negative input");
  return std::min(remaining, horizon);
}

KeyedOutputHistory KeyedOutputHistory::fit(std::span<const Request> requests) {
  std::vector<Tokens> all;
  all.reserve(requests.size());
  std::unordered_map<std::uint64_t, std::vector<Tokens>> per_key;
  for (const Request& r : requests) {
    all.push_back(r.output_len);
    if (r.prompt_key) per_key[*r.prompt_key].push_back(r.output_len);
  }
  std::unordered_map<std::uint64_t, OutputHistory> keyed;
  keyed.reserve(per_key.size());
  for (auto& [key, outputs] : per_key) keyed.emplace(key, OutputHistory::fit(outputs));
  return KeyedOutputHistory(OutputHistory::fit(all), std::move(keyed));
}

const OutputHistory* KeyedOutputHistory::bucket(std::uint64_t key) const {
  auto it = keyed_.find(key);
  if (it == keyed_.end() || it->second.empty()) return nullptr;
  return &it->second;
}

double exactmatch_contribution(std::optional<std::uint64_t> key, Step age, Step horizon,
                               const KeyedOutputHistory& hist) {
  const OutputHistory* h = key ? hist.bucket(*key) : nullptr;
  if (h == nullptr) h = &hist.marginal();
  const double p = p_fin_survival(age, horizon, *h);
  const double mu = mu_rem_survival(age, horizon, *h);
  return composite_contribution(p, mu, horizon);
}

PredictionService::PredictionService(const PredictorConfig& config, Step horizon,
                                     const KeyedOutputHistory* corpus, OracleOutputFn oracle_output)
    : config_(config),
      horizon_(config.horizon > 0 ? config.horizon : horizon),
      corpus_(corpus),
      oracle_output_(std::move(oracle_output)) {
  if (horizon_ < 1) throw std::invalid_argument("PredictionService: horizon must be >= 1");
  refresh_period_ = config.refresh_period > 0 ? config.refresh_period : std::max<Step>(1, horizon_ / 2);
  if (config_.kind == PredictorKind::Oracle) {
    if (!oracle_output_) throw std::invalid_argument("PredictionService: oracle mode needs ground truth");
  } else {
    if (corpus_ == nullptr || corpus_->marginal().empty()) {
      throw std::invalid_argument("PredictionService: fitted corpus required and must be non-empty");
    }
  }
}

void PredictionService::on_admit(ActiveEntry& entry) {
  entry.prediction = PredictionState{};
  refresh(entry, EventKind::Admit);
}

void PredictionService::on_token(ActiveEntry& entry) {
  if (!entry.prediction) throw std::logic_error("PredictionService: entry has no prediction state");
  PredictionState& st = *entry.prediction;
  st.steps_since_refresh += 1;
  const double decremented = st.c_hat - 1.0;
  const bool due = config_.kind == PredictorKind::Oracle ||
                   st.steps_since_refresh >= refresh_period_ || decremented < 1.0;
  if (!due) {
    st.c_hat = decremented;
    if (observer_) observer_({EventKind::Decrement, entry.request_id, entry.age, 0.0, false, st.c_hat});
    return;
  }
  refresh(entry, EventKind::Refresh);
}

void PredictionService::refresh(ActiveEntry& entry, EventKind kind) {
  PredictionState& st = *entry.prediction;
  const Step age = entry.age;
  double p = 0.0;
  bool gate_closed = false;
  if (config_.kind == PredictorKind::Oracle) {
    const Tokens total = oracle_output_(entry.request_id);
    const Tokens remaining = total - age;
    if (remaining < 1) throw std::logic_error("PredictionService: oracle refresh on departed request");
    st.c_hat = static_cast<double>(oracle_contribution(remaining, horizon_));
    p = 1.0;
  } else {
    const OutputHistory* h = &corpus_->marginal();
    if (config_.kind == PredictorKind::ExactMatch && entry.prompt_key) {
      if (const OutputHistory* b = corpus_->bucket(*entry.prompt_key)) h = b;
    }
    p = p_fin_survival(age, horizon_, *h);
    if (p >= config_.gate_threshold) {
      const double mu = mu_rem_survival(age, horizon_, *h);
      st.c_hat = std::max(1.0, composite_contribution(p, mu, horizon_));
    } else {
      gate_closed = true;
      st.c_hat = static_cast<double>(horizon_);
    }
  }
  st.steps_since_refresh = 0;
  if (observer_) observer_({kind, entry.request_id, age, p, gate_closed, st.c_hat});
}

const char* predictor_kind_name(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::Oracle:
      return "oracle";
    case PredictorKind::Survival:
      return "survival";
    case PredictorKind::ExactMatch:
      return "exactmatch";
  }
  throw std::invalid_argument("unknown predictor kind");
}

PredictorKind parse_predictor_kind(std::string_view name) {
  if (name == "oracle") return PredictorKind::Oracle;
  if (name == "survival") return PredictorKind::Survival;
  if (name == "exactmatch" || name == "exact-match") return PredictorKind::ExactMatch;
  throw std::invalid_argument("unknown predictor kind: " + std::string(name));
}

}  // namespace brsim
