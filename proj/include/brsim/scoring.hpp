#pragma once

#include <span>
#include <vector>

#include "brsim/core.hpp"

namespace brsim {

// Admission-scoring knobs. horizon == 0 selects the instantaneous family.
struct ScoreParams {
  double alpha = 1.0;
  double beta = 48.0;
  double gamma = 0.9;
  Step horizon = 0;
};

// d_h = gamma^h for h = 0..H, built iteratively so d_h == gamma * d_{h-1}
// holds exactly. total caches the sum used by the horizon score.
struct DiscountVector {
  std::vector<double> entries;
  double gamma = 1.0;
  double total = 0.0;

  Step horizon() const { return static_cast<Step>(entries.size()) - 1; }
};

using MarginVector = std::vector<Tokens>;

DiscountVector discount_vector(Step horizon, double gamma);

// Headroom of one worker below the fleet max.
Tokens safe_margin_step(Tokens load, Tokens max_load);

// Instantaneous admission score for adding delta_s to a worker with margin
// m: delta_s - G * max(delta_s - m, 0). Positive slope below the margin,
// slope -(G-1) above it.
double fscore_step(Tokens delta_s, Tokens margin, int num_workers);

// Discounted-horizon admission score:
// alpha * (sum_h d_h) * delta_s - beta * sum_h d_h * max(delta_s - m_h, 0).
// With H = 0, alpha = 1, beta = G this equals fscore_step bit-for-bit.
double fscore_horizon(Tokens delta_s, std::span<const Tokens> margins, const DiscountVector& d,
                      const ScoreParams& params);

}  // namespace brsim
