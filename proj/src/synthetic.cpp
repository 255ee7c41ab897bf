#include "brsim/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "brsim/rng.hpp"

namespace brsim {
namespace {

void validate(const LengthDist& dist, const char* what) {
  const std::string name = what;
  if (dist.clamp_lo < 1) throw std::invalid_argument(name + " clamp_lo must be >= 1");
  if (dist.clamp_hi < dist.clamp_lo) throw std::invalid_argument(name + " clamp range is empty");
  switch (dist.kind) {
    case DistKind::Constant:
      if (dist.a < 1.0) throw std::invalid_argument(name + " constant must be >= 1");
      return;
    case DistKind::Uniform:
      if (dist.a < 1.0 || dist.b < dist.a) throw std::invalid_argument(name + " uniform bounds invalid");
      return;
    case DistKind::LogNormal:
      if (!std::isfinite(dist.a) || !(dist.b >= 0.0)) {
        throw std::invalid_argument(name + " lognormal parameters invalid");
      }
      return;
  }
  throw std::invalid_argument(name + " has unknown distribution kind");
}

}  // namespace

double LengthDist::mean() const {
  switch (kind) {
    case DistKind::Constant:
      return a;
    case DistKind::Uniform:
      return (a + b) / 2.0;
    case DistKind::LogNormal:
      return std::exp(a + b * b / 2.0);
  }
  throw std::invalid_argument("unknown distribution kind");
}

Tokens sample_length(const LengthDist& dist, std::mt19937_64& rng) {
  Tokens value = 0;
  switch (dist.kind) {
    case DistKind::Constant:
      value = std::llround(dist.a);
      break;
    case DistKind::Uniform:
      value = uniform_int(rng, std::llround(dist.a), std::llround(dist.b));
      break;
    case DistKind::LogNormal:
      value = std::llround(lognormal(rng, dist.a, dist.b));
      break;
  }
  return std::clamp(value, dist.clamp_lo, dist.clamp_hi);
}

std::vector<Request> generate_synthetic(const SynthSpec& spec) {
  if (spec.count < 0) throw std::invalid_argument("count must be >= 0");
  if (!(spec.arrival_rate >= 0.0) || !std::isfinite(spec.arrival_rate)) {
    throw std::invalid_argument("arrival_rate must be finite and >= 0");
  }
  validate(spec.prompt, "prompt");
  validate(spec.output, "output");
  if (spec.keys.repeat_prob < 0.0 || spec.keys.repeat_prob > 1.0) {
    throw std::invalid_argument("key repeat_prob must be in [0, 1]");
  }
  if (spec.keys.repeat_prob > 0.0 && spec.keys.pool_size == 0) {
    throw std::invalid_argument("key repeat_prob > 0 requires a non-empty key pool");
  }

  std::mt19937_64 rng(spec.seed);
  std::vector<Request> trace;
  trace.reserve(static_cast<std::size_t>(spec.count));
  double clock = 0.0;
  for (std::int64_t i = 0; i < spec.count; ++i) {
    Request r;
    r.id = i;
    if (spec.arrival_rate > 0.0) {
      clock += exponential(rng, spec.arrival_rate);
      r.arrival_step = static_cast<Step>(clock);
    }
    r.prefill_len = sample_length(spec.prompt, rng);
    r.output_len = sample_length(spec.output, rng);
    if (spec.keys.pool_size > 0 && uniform_real(rng) < spec.keys.repeat_prob) {
      r.prompt_key = static_cast<std::uint64_t>(
          uniform_int(rng, 0, static_cast<std::int64_t>(spec.keys.pool_size) - 1));
    }
    trace.push_back(r);
  }
  return trace;
}

SynthSpec heavy_tail_profile(std::int64_t count, double arrival_rate, std::uint64_t seed) {
  SynthSpec spec;
  spec.count = count;
  spec.arrival_rate = arrival_rate;
  spec.seed = seed;
  spec.prompt = LengthDist{DistKind::LogNormal, 7.665, 0.9, 16, 65536};
  spec.output = LengthDist{DistKind::LogNormal, 6.472, 1.1, 1, 65536};
  return spec;
}

SynthSpec cap_bounded_profile(std::int64_t count, double arrival_rate, std::uint64_t seed) {
  SynthSpec spec;
  spec.count = count;
  spec.arrival_rate = arrival_rate;
  spec.seed = seed;
  spec.prompt = LengthDist{DistKind::LogNormal, 8.200, 0.7, 64, 32768};
  spec.output = LengthDist{DistKind::LogNormal, 7.109, 0.35, 1001, 2048};
  return spec;
}

double arrival_rate_for_utilization(double utilization, int num_workers, Tokens capacity,
                                    double mean_output_len) {
  if (!(utilization > 0.0) || !std::isfinite(utilization)) {
    throw std::invalid_argument("utilization must be > 0");
  }
  if (num_workers < 1 || capacity < 1) throw std::invalid_argument("need >= 1 worker and slot");
  if (!(mean_output_len > 0.0)) throw std::invalid_argument("mean_output_len must be > 0");
  return utilization * static_cast<double>(num_workers) * static_cast<double>(capacity) /
         mean_output_len;
}

}  // namespace brsim
