#pragma once

#include <cstdint>

namespace brsim {

// Cached expected in-window contribution of one active request.
// c_hat lives in [1, H] while the request is active; the owning service
// decrements it once per generated token and re-queries on schedule.
struct PredictionState {
  double c_hat = 1.0;
  std::int64_t steps_since_refresh = 0;
};

}  // namespace brsim
