#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "brsim/core.hpp"

namespace brsim {

enum class DistKind {
  Constant,   // always a
  Uniform,    // integer uniform on [a, b]
  LogNormal,  // exp(Normal(a, b)), rounded to the nearest token count
};

struct LengthDist {
  DistKind kind = DistKind::Constant;
  double a = 1.0;
  double b = 0.0;
  Tokens clamp_lo = 1;
  Tokens clamp_hi = std::numeric_limits<Tokens>::max();

  // Analytic mean of the unclamped distribution (clamps are chosen so they
  // bind rarely, or deliberately, as in the cap-bounded profile).
  double mean() const;
};

Tokens sample_length(const LengthDist& dist, std::mt19937_64& rng);

// Optional prompt-key assignment: with probability repeat_prob a request gets
// a key drawn uniformly from [0, pool_size); otherwise it carries no key.
struct KeySpec {
  std::uint64_t pool_size = 0;
  double repeat_prob = 0.0;
};

struct SynthSpec {
  std::int64_t count = 1000;
  double arrival_rate = 1.0;  // requests per step; 0 means all arrive at step 0
  LengthDist prompt;
  LengthDist output;
  KeySpec keys;
  std::uint64_t seed = 1;
};

// Deterministic for a fixed spec; requests come back sorted by arrival with
// ids 0..count-1 in arrival order.
std::vector<Request> generate_synthetic(const SynthSpec& spec);

// Long-tailed outputs (lognormal, occasional multi-thousand-token decodes)
// with wide lognormal prompts.
SynthSpec heavy_tail_profile(std::int64_t count, double arrival_rate, std::uint64_t seed);

// Outputs concentrated in a band and truncated at a generation cap, the shape
// of a chat trace filtered to long decodes.
SynthSpec cap_bounded_profile(std::int64_t count, double arrival_rate, std::uint64_t seed);

// Request rate that keeps mean in-flight work at `utilization` times the
// fleet's total slot count: rate = utilization * G * B / mean_output.
double arrival_rate_for_utilization(double utilization, int num_workers, Tokens capacity,
                                    double mean_output_len);

}  // namespace brsim
