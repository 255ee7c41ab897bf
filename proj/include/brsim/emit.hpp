#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include <json.hpp>

#include "brsim/simulator.hpp"
#include "brsim/sweep.hpp"

namespace brsim {

// Flat key set mirroring the CLI flags: G, B, router, predictor, H, alpha,
// beta, gamma, s_greedy, r_max, delta_t, gate_threshold, rng_seed,
// p2c_compare_count, step_time_a, step_time_b, max_steps, seed,
// train_fraction.
nlohmann::ordered_json config_to_json(const SimConfig& config);

// Overlays the given document onto `base`; unknown keys are errors so typos
// cannot silently fall back to defaults.
SimConfig config_from_json(const nlohmann::json& doc, SimConfig base = {});

nlohmann::ordered_json summary_to_json(const RunSummary& summary);

// {"config": ..., "summary": ...} — every emitted run carries the fully
// resolved configuration that produced it.
nlohmann::ordered_json run_report_json(const SimConfig& config, const RunSummary& summary);

void write_run_report(const SimConfig& config, const RunSummary& summary, const std::string& path);

// Header: k,load_0..load_{G-1},imbalance_total,imbalance_spread,step_time.
// Emission is byte-stable; step_time uses fixed 6-decimal formatting.
void write_steps_csv(std::span<const StepRecord> records, int num_workers, std::ostream& out);
void write_steps_csv(std::span<const StepRecord> records, int num_workers,
                     const std::string& path);

// One row per cell; failed cells carry their error and empty metric columns.
void write_sweep_csv(const SweepReport& report, std::ostream& out);
void write_sweep_csv(const SweepReport& report, const std::string& path);

}  // namespace brsim
