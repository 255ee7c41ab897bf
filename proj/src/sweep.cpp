#include "brsim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <thread>

namespace brsim {
namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

struct AxisBinding {
  const char* name;
  std::size_t count;  // 0 when the axis is not swept
  std::function<void(SimConfig&, std::size_t)> apply;
  std::function<std::string(const SimConfig&)> render;
};

std::vector<AxisBinding> make_bindings(const SweepAxes& axes) {
  std::vector<AxisBinding> out;
  out.push_back({"G", axes.num_workers.size(),
                 [&axes](SimConfig& c, std::size_t i) { c.num_workers = axes.num_workers[i]; },
                 [](const SimConfig& c) { return std::to_string(c.num_workers); }});
  out.push_back({"router", axes.router.size(),
                 [&axes](SimConfig& c, std::size_t i) { c.router.kind = axes.router[i]; },
                 [](const SimConfig& c) { return std::string(router_kind_name(c.router.kind)); }});
  out.push_back(
      {"predictor", axes.predictor.size(),
       [&axes](SimConfig& c, std::size_t i) { c.router.predictor.kind = axes.predictor[i]; },
       [](const SimConfig& c) {
         return std::string(predictor_kind_name(c.router.predictor.kind));
       }});
  out.push_back({"H", axes.horizon.size(),
                 [&axes](SimConfig& c, std::size_t i) { c.router.score.horizon = axes.horizon[i]; },
                 [](const SimConfig& c) { return std::to_string(c.router.score.horizon); }});
  out.push_back({"beta", axes.beta.size(),
                 [&axes](SimConfig& c, std::size_t i) { c.router.score.beta = axes.beta[i]; },
                 [](const SimConfig& c) { return fmt_double(c.router.score.beta); }});
  out.push_back({"gamma", axes.gamma.size(),
                 [&axes](SimConfig& c, std::size_t i) { c.router.score.gamma = axes.gamma[i]; },
                 [](const SimConfig& c) { return fmt_double(c.router.score.gamma); }});
  out.push_back({"seed", axes.seed.size(),
                 [&axes](SimConfig& c, std::size_t i) { c.seed = axes.seed[i]; },
                 [](const SimConfig& c) { return std::to_string(c.seed); }});
  return out;
}

bool same_cell(const SimConfig& a, const SimConfig& b) {
  return a.num_workers == b.num_workers && a.router.kind == b.router.kind &&
         a.router.predictor.kind == b.router.predictor.kind &&
         a.router.score.horizon == b.router.score.horizon &&
         a.router.score.beta == b.router.score.beta &&
         a.router.score.gamma == b.router.score.gamma && a.seed == b.seed;
}

void push_cell(std::vector<SweepCell>& cells, const SimConfig& config,
               const std::vector<AxisBinding>& bindings, std::size_t max_cells) {
  for (const SweepCell& existing : cells) {
    if (same_cell(existing.config, config)) return;
  }
  if (cells.size() >= max_cells) {
    throw std::invalid_argument("sweep exceeds max_cells = " + std::to_string(max_cells));
  }
  std::string label;
  for (const AxisBinding& axis : bindings) {
    if (axis.count == 0) continue;
    if (!label.empty()) label += ',';
    label += axis.name;
    label += '=';
    label += axis.render(config);
  }
  cells.push_back(SweepCell{config, std::move(label)});
}

}  // namespace

std::vector<SweepCell> expand_cells(const SweepSpec& spec) {
  if (spec.axes.empty()) throw std::invalid_argument("sweep needs at least one axis");
  if (spec.max_cells == 0) throw std::invalid_argument("max_cells must be >= 1");
  const std::vector<AxisBinding> bindings = make_bindings(spec.axes);
  std::vector<SweepCell> cells;

  if (spec.mode == SweepMode::Cross) {
    for (const AxisBinding& axis : bindings) {
      for (std::size_t i = 0; i < axis.count; ++i) {
        SimConfig config = spec.base;
        axis.apply(config, i);
        push_cell(cells, config, bindings, spec.max_cells);
      }
    }
    return cells;
  }

  // Grid: cartesian product over the swept axes, base values elsewhere.
  std::function<void(std::size_t, SimConfig&)> descend = [&](std::size_t a, SimConfig& config) {
    if (a == bindings.size()) {
      push_cell(cells, config, bindings, spec.max_cells);
      return;
    }
    const AxisBinding& axis = bindings[a];
    if (axis.count == 0) {
      descend(a + 1, config);
      return;
    }
    for (std::size_t i = 0; i < axis.count; ++i) {
      SimConfig next = config;
      axis.apply(next, i);
      descend(a + 1, next);
    }
  };
  SimConfig base = spec.base;
  descend(0, base);
  return cells;
}

SweepReport run_sweep(const SweepSpec& spec) {
  const std::vector<SweepCell> cells = expand_cells(spec);
  if (!spec.synth && spec.trace.empty()) {
    throw std::invalid_argument("sweep needs a trace or a synthetic workload spec");
  }
  if (spec.scale_rate_with_workers && !spec.synth) {
    throw std::invalid_argument("scale_rate_with_workers requires a synthetic workload spec");
  }
  if (spec.scale_rate_with_workers && spec.base.num_workers < 1) {
    throw std::invalid_argument("scale_rate_with_workers requires base num_workers >= 1");
  }

  SweepReport report;
  report.cells.resize(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) report.cells[i].cell = cells[i];

  std::atomic<std::size_t> next{0};
  auto run_cell = [&](std::size_t i) {
    SweepCellResult& result = report.cells[i];
    try {
      RunResult run;
      if (spec.synth) {
        SynthSpec synth = *spec.synth;
        if (spec.scale_rate_with_workers) {
          synth.arrival_rate *= static_cast<double>(result.cell.config.num_workers) /
                                static_cast<double>(spec.base.num_workers);
        }
        run = run_trace(generate_synthetic(synth), result.cell.config);
      } else {
        run = run_trace(spec.trace, result.cell.config);
      }
      result.summary = run.summary;
      result.ok = true;
    } catch (const std::exception& e) {
      result.ok = false;
      result.error = e.what();
    }
  };

  std::size_t threads = spec.threads > 0 ? static_cast<std::size_t>(spec.threads)
                                         : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, cells.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
    return report;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
        run_cell(i);
      }
    });
  }
  for (std::thread& t : pool) t.join();
  return report;
}

}  // namespace brsim
