#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "brsim/core.hpp"

namespace brsim {

// Empirical distribution of completed output lengths (decode steps).
// Fitting is sorting; queries are binary searches over the sorted sample.
class OutputHistory {
 public:
  OutputHistory() = default;

  static OutputHistory fit(std::span<const Tokens> outputs);

  bool empty() const { return sorted_.empty(); }
  std::size_t size() const { return sorted_.size(); }

  // Number of samples <= t.
  std::int64_t count_le(Tokens t) const;

  // Empirical CDF F(t) = count_le(t) / n.
  double cdf(Tokens t) const;

  // Sum of samples o with lo < o <= hi.
  Tokens sum_in(Tokens lo, Tokens hi) const;
  std::int64_t count_in(Tokens lo, Tokens hi) const;

  std::span<const Tokens> sorted() const { return sorted_; }

 private:
  std::vector<Tokens> sorted_;
  std::vector<Tokens> prefix_;  // prefix_[i] = sum of sorted_[0..i)
};

// Probability that a request already a tokens old finishes within the next
// horizon tokens: (F(a+H) - F(a)) / (1 - F(a)). A zero denominator (no
// sample survives past a) resolves to 1.
double p_fin_survival(Step age, Step horizon, const OutputHistory& hist);

// Mean remaining tokens among samples in (a, a+H]; horizon when that
// conditioning set is empty.
double mu_rem_survival(Step age, Step horizon, const OutputHistory& hist);

// Expected in-window contribution (1 - p) * H + p * mu, clipped to [0, H].
double composite_contribution(double p_fin, double mu_rem, Step horizon);

// Perfect-information contribution min(remaining, H).
Tokens oracle_contribution(Tokens remaining, Step horizon);

// Marginal history plus per-prompt-key sub-histories. A key with at least
// one sample answers queries from its own bucket (including the bucket's
// own denominator-zero rule); unknown keys fall back to the marginal.
class KeyedOutputHistory {
 public:
  KeyedOutputHistory() = default;
  KeyedOutputHistory(OutputHistory marginal,
                     std::unordered_map<std::uint64_t, OutputHistory> keyed)
      : marginal_(std::move(marginal)), keyed_(std::move(keyed)) {}

  static KeyedOutputHistory fit(std::span<const Request> requests);

  const OutputHistory& marginal() const { return marginal_; }
  const OutputHistory* bucket(std::uint64_t key) const;
  std::size_t num_keys() const { return keyed_.size(); }

 private:
  OutputHistory marginal_;
  std::unordered_map<std::uint64_t, OutputHistory> keyed_;
};

// ExactMatch composite: keyed bucket when the key is known, marginal
// otherwise. Returns the clipped composite contribution.
double exactmatch_contribution(std::optional<std::uint64_t> key, Step age, Step horizon,
                               const KeyedOutputHistory& hist);

enum class PredictorKind { Oracle, Survival, ExactMatch };

struct PredictorConfig {
  PredictorKind kind = PredictorKind::Oracle;
  Step horizon = 0;         // 0 = inherit the score horizon
  Step refresh_period = 0;  // 0 = default max(1, H / 2)
  double gate_threshold = 0.5;
};

// Owns the per-request prediction lifecycle: an initial query at admission,
// then one decrement-or-refresh per generated token. Oracle mode re-queries
// ground truth every token so c_hat tracks min(remaining, H) exactly;
// survival modes refresh every refresh_period tokens or when c_hat would
// cross the floor of 1, and reset to H when the finish gate stays closed
// (p_fin below the threshold).
class PredictionService {
 public:
  enum class EventKind { Admit, Decrement, Refresh };
  struct Event {
    EventKind kind = EventKind::Decrement;
    RequestId id = 0;
    Step age = 0;
    double p_fin = 0.0;       // Admit/Refresh with a fitted predictor
    bool gate_closed = false; // Admit/Refresh only
    double c_after = 0.0;
  };
  using Observer = std::function<void(const Event&)>;
  using OracleOutputFn = std::function<Tokens(RequestId)>;  // total output length

  PredictionService(const PredictorConfig& config, Step horizon,
                    const KeyedOutputHistory* corpus, OracleOutputFn oracle_output);

  // Initial prediction at admission (age 0).
  void on_admit(ActiveEntry& entry);

  // One generated token; entry.age must already be advanced.
  void on_token(ActiveEntry& entry);

  Step horizon() const { return horizon_; }
  Step refresh_period() const { return refresh_period_; }
  void set_observer(Observer obs) { observer_ = std::move(obs); }

 private:
  void refresh(ActiveEntry& entry, EventKind kind);

  PredictorConfig config_;
  Step horizon_ = 0;
  Step refresh_period_ = 1;
  const KeyedOutputHistory* corpus_ = nullptr;
  OracleOutputFn oracle_output_;
  Observer observer_;
};

const char* predictor_kind_name(PredictorKind kind);
PredictorKind parse_predictor_kind(std::string_view name);

}  // namespace brsim
