#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace brsim {

// Samplers over std::mt19937_64 written out explicitly so that generated
// traces and routing decisions are byte-reproducible across standard
// libraries (std::*_distribution output is implementation-defined).

inline std::uint64_t rand_u64(std::mt19937_64& rng) { return rng(); }

// Uniform integer in [lo, hi] via rejection, no modulo bias.
inline std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(rng());  // full 64-bit range
  const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return lo + static_cast<std::int64_t>(v % span);
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_real(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double exponential(std::mt19937_64& rng, double rate) {
  double u = uniform_real(rng);
  return -std::log1p(-u) / rate;
}

// Box-Muller, two fresh draws per sample; stateless so call order alone
// determines the stream.
inline double normal(std::mt19937_64& rng, double mean, double stddev) {
  double u1 = uniform_real(rng);
  while (u1 == 0.0) u1 = uniform_real(rng);
  const double u2 = uniform_real(rng);
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  return mean + stddev * z;
}

inline double lognormal(std::mt19937_64& rng, double mu, double sigma) {
  return std::exp(normal(rng, mu, sigma));
}

// Stable 64-bit mix for deriving sub-seeds from (seed, tag) pairs.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t x = seed ^ (tag + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace brsim
