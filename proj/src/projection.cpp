#include "brsim/projection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace brsim {

HorizonProjection::HorizonProjection(int num_workers, Step horizon)
    : num_workers_(num_workers), horizon_(horizon) {
  if (num_workers < 1) throw std::invalid_argument("HorizonProjection: need at least one worker");
  if (horizon < 0) throw std::invalid_argument("HorizonProjection: horizon must be >= 0");
  loads_.assign(static_cast<std::size_t>(num_workers) * static_cast<std::size_t>(horizon + 1), 0);
  envelope_.assign(static_cast<std::size_t>(horizon + 1), 0);
  margins_.assign(loads_.size(), 0);
}

std::span<const Tokens> HorizonProjection::margins(int worker) const {
  return {margins_.data() + index(worker, 0), static_cast<std::size_t>(horizon_ + 1)};
}

std::span<const Tokens> HorizonProjection::load_row(int worker) const {
  return {loads_.data() + index(worker, 0), static_cast<std::size_t>(horizon_ + 1)};
}

Tokens HorizonProjection::min_margin(int worker) const {
  const auto row = margins(worker);
  return *std::min_element(row.begin(), row.end());
}

void HorizonProjection::add_constant(int worker, Tokens delta) {
  for (Step h = 0; h <= horizon_; ++h) {
    const std::size_t li = index(worker, h);
    loads_[li] += delta;
    const std::size_t hi = static_cast<std::size_t>(h);
    if (loads_[li] > envelope_[hi]) {
      const Tokens grow = loads_[li] - envelope_[hi];
      envelope_[hi] = loads_[li];
      for (int g = 0; g < num_workers_; ++g) margins_[index(g, h)] += grow;
    }
    margins_[li] = envelope_[hi] - loads_[li];
  }
}

void HorizonProjection::finalize() {
  for (Step h = 0; h <= horizon_; ++h) {
    Tokens max = 0;
    for (int g = 0; g < num_workers_; ++g) max = std::max(max, loads_[index(g, h)]);
    envelope_[static_cast<std::size_t>(h)] = max;
    for (int g = 0; g < num_workers_; ++g) margins_[index(g, h)] = max - loads_[index(g, h)];
  }
}

namespace {

double required_c_hat(const ActiveEntry& e, Step horizon) {
  if (!e.prediction) throw std::logic_error("projection: active entry lacks prediction state");
  const double c = e.prediction->c_hat;
  if (c < 1.0 || c > static_cast<double>(horizon)) {
    throw std::logic_error("projection: c_hat outside [1, horizon]");
  }
  return c;
}

}  // namespace

HorizonProjection project_naive(std::span<const WorkerState> workers, Step horizon) {
  HorizonProjection proj(static_cast<int>(workers.size()), horizon);
  for (int g = 0; g < static_cast<int>(workers.size()); ++g) {
    const WorkerState& w = workers[static_cast<std::size_t>(g)];
    Tokens now = 0;
    for (const ActiveEntry& e : w.active) now += e.prefill_len + e.age;
    proj.set_load(g, 0, now);
    for (Step h = 1; h <= horizon; ++h) {
      Tokens sum = 0;
      for (const ActiveEntry& e : w.active) {
        if (required_c_hat(e, horizon) >= static_cast<double>(h)) {
          sum += e.prefill_len + e.age + h - 1;
        }
      }
      proj.set_load(g, h, sum);
    }
  }
  proj.finalize();
  return proj;
}

HorizonProjection project_fast(std::span<const WorkerState> workers, Step horizon) {
  HorizonProjection proj(static_cast<int>(workers.size()), horizon);
  std::vector<Tokens> bucket_count(static_cast<std::size_t>(horizon) + 2, 0);
  std::vector<Tokens> bucket_base(static_cast<std::size_t>(horizon) + 2, 0);
  for (int g = 0; g < static_cast<int>(workers.size()); ++g) {
    const WorkerState& w = workers[static_cast<std::size_t>(g)];
    Tokens now = 0;
    for (const ActiveEntry& e : w.active) now += e.prefill_len + e.age;
    proj.set_load(g, 0, now);
    if (horizon >= 1) {
      std::fill(bucket_count.begin(), bucket_count.end(), 0);
      std::fill(bucket_base.begin(), bucket_base.end(), 0);
      for (const ActiveEntry& e : w.active) {
        const double c = required_c_hat(e, horizon);
        const Step last = std::min<Step>(horizon, static_cast<Step>(std::floor(c)));
        bucket_count[static_cast<std::size_t>(last)] += 1;
        bucket_base[static_cast<std::size_t>(last)] += e.prefill_len + e.age - 1;
      }
      Tokens live = 0;
      Tokens base = 0;
      for (Step h = horizon; h >= 1; --h) {
        live += bucket_count[static_cast<std::size_t>(h)];
        base += bucket_base[static_cast<std::size_t>(h)];
        proj.set_load(g, h, base + h * live);
      }
    }
  }
  proj.finalize();
  return proj;
}

HorizonProjection apply_admission(HorizonProjection projection, int worker, Tokens delta_s) {
  if (worker < 0 || worker >= projection.num_workers()) {
    throw std::invalid_argument("apply_admission: worker index out of range");
  }
  if (delta_s < 0) throw std::invalid_argument("apply_admission: delta_s must be >= 0");
  projection.add_constant(worker, delta_s);
  return projection;
}

}  // namespace brsim
