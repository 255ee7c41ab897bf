#include "brsim/scoring.hpp"

#include <stdexcept>

namespace brsim {

DiscountVector discount_vector(Step horizon, double gamma) {
  if (horizon < 0) throw std::invalid_argument("discount_vector: horizon must be >= 0");
  if (!(gamma > 0.0) || gamma > 1.0) throw std::invalid_argument("discount_vector: gamma must be in (0, 1]");
  DiscountVector d;
  d.gamma = gamma;
  d.entries.resize(static_cast<std::size_t>(horizon) + 1);
  d.entries[0] = 1.0;
  for (Step h = 1; h <= horizon; ++h) {
    d.entries[static_cast<std::size_t>(h)] = gamma * d.entries[static_cast<std::size_t>(h - 1)];
  }
  d.total = 0.0;
  for (double v : d.entries) d.total += v;
  return d;
}

Tokens safe_margin_step(Tokens load, Tokens max_load) {
  if (load > max_load) throw std::invalid_argument("safe_margin_step: load exceeds max_load");
  return max_load - load;
}

double fscore_step(Tokens delta_s, Tokens margin, int num_workers) {
  if (delta_s < 0) throw std::invalid_argument("fscore_step: delta_s must be >= 0");
  if (margin < 0) throw std::invalid_argument("fscore_step: margin must be >= 0");
  if (num_workers < 1) throw std::invalid_argument("fscore_step: num_workers must be >= 1");
  const Tokens excess = delta_s > margin ? delta_s - margin : 0;
  return static_cast<double>(delta_s) - static_cast<double>(num_workers) * static_cast<double>(excess);
}

double fscore_horizon(Tokens delta_s, std::span<const Tokens> margins, const DiscountVector& d,
                      const ScoreParams& params) {
  if (delta_s < 0) throw std::invalid_argument("fscore_horizon: delta_s must be >= 0");
  if (margins.size() != d.entries.size()) {
    throw std::invalid_argument("fscore_horizon: margins and discount vector differ in length");
  }
  double penalty = 0.0;
  for (std::size_t h = 0; h < margins.size(); ++h) {
    if (margins[h] < 0) throw std::invalid_argument("fscore_horizon: margin must be >= 0");
    const Tokens excess = delta_s > margins[h] ? delta_s - margins[h] : 0;
    penalty += d.entries[h] * static_cast<double>(excess);
  }
  return params.alpha * d.total * static_cast<double>(delta_s) - params.beta * penalty;
}

}  // namespace brsim
