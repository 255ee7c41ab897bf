#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "brsim/emit.hpp"
#include "brsim/simulator.hpp"
#include "brsim/sweep.hpp"
#include "brsim/synthetic.hpp"
#include "brsim/trace_io.hpp"

namespace {

using brsim::SimConfig;

// One variable per routing/simulation flag; a flag only overrides the
// resolved config when the user actually passed it, so file-provided values
// survive unrelated flags.
struct ConfigFlags {
  int G = 0;
  int B = 0;
  int s_greedy = 0;
  int r_max = 0;
  std::int64_t H = 0;
  std::int64_t delta_t = 0;
  std::int64_t max_steps = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double gate_threshold = 0.0;
  double step_time_a = 0.0;
  double step_time_b = 0.0;
  double train_fraction = 0.0;
  std::string router;
  std::string predictor;
  std::uint64_t seed = 0;
  std::uint64_t rng_seed = 0;
  bool p2c_compare_count = false;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--G", f.G, "number of workers");
  cmd->add_option("--B", f.B, "per-worker request capacity");
  cmd->add_option("--router", f.router, "random|rr|p2c|jsq|br0|brh");
  cmd->add_option("--predictor", f.predictor, "oracle|survival|exactmatch");
  cmd->add_option("--H", f.H, "scoring horizon (steps)");
  cmd->add_option("--alpha", f.alpha, "horizon score gain weight");
  cmd->add_option("--beta", f.beta, "horizon score penalty weight");
  cmd->add_option("--gamma", f.gamma, "horizon discount factor");
  cmd->add_option("--s-greedy", f.s_greedy, "free-slot threshold for the greedy stage (-1 = G)");
  cmd->add_option("--r-max", f.r_max, "candidate window size for subset selection");
  cmd->add_option("--delta-t", f.delta_t, "prediction refresh period (0 = max(1, H/2))");
  cmd->add_option("--gate-threshold", f.gate_threshold, "finish-probability gate");
  cmd->add_option("--seed", f.seed, "run seed");
  cmd->add_option("--rng-seed", f.rng_seed, "router RNG seed override");
  cmd->add_flag("--p2c-compare-count", f.p2c_compare_count, "p2c compares active counts, not loads");
  cmd->add_option("--step-time-a", f.step_time_a, "ms per token of max per-step load");
  cmd->add_option("--step-time-b", f.step_time_b, "fixed ms per step");
  cmd->add_option("--max-steps", f.max_steps, "step cap before aborting a run");
  cmd->add_option("--train-fraction", f.train_fraction,
                  "trace prefix fraction used to fit predictors when no train trace is given");
}

void apply_config_flags(const CLI::App* cmd, const ConfigFlags& f, SimConfig& cfg) {
  if (cmd->count("--G")) cfg.num_workers = f.G;
  if (cmd->count("--B")) cfg.capacity = f.B;
  if (cmd->count("--router")) cfg.router.kind = brsim::parse_router_kind(f.router);
  if (cmd->count("--predictor")) cfg.router.predictor.kind = brsim::parse_predictor_kind(f.predictor);
  if (cmd->count("--H")) cfg.router.score.horizon = f.H;
  if (cmd->count("--alpha")) cfg.router.score.alpha = f.alpha;
  if (cmd->count("--beta")) cfg.router.score.beta = f.beta;
  if (cmd->count("--gamma")) cfg.router.score.gamma = f.gamma;
  if (cmd->count("--s-greedy")) cfg.router.s_greedy = f.s_greedy;
  if (cmd->count("--r-max")) cfg.router.r_max = f.r_max;
  if (cmd->count("--delta-t")) cfg.router.predictor.refresh_period = f.delta_t;
  if (cmd->count("--gate-threshold")) cfg.router.predictor.gate_threshold = f.gate_threshold;
  if (cmd->count("--seed")) cfg.seed = f.seed;
  if (cmd->count("--rng-seed")) cfg.router.rng_seed = f.rng_seed;
  if (cmd->count("--p2c-compare-count")) cfg.router.p2c_compare_count = f.p2c_compare_count;
  if (cmd->count("--step-time-a")) cfg.step_time_a = f.step_time_a;
  if (cmd->count("--step-time-b")) cfg.step_time_b = f.step_time_b;
  if (cmd->count("--max-steps")) cfg.max_steps = f.max_steps;
  if (cmd->count("--train-fraction")) cfg.train_fraction = f.train_fraction;
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

brsim::TraceFormat parse_format(const std::string& name) {
  if (name == "native") return brsim::TraceFormat::Native;
  if (name == "azure") return brsim::TraceFormat::AzureCsv;
  throw std::runtime_error("unknown trace format: " + name + " (expected native|azure)");
}

brsim::SynthSpec synth_from_json(const nlohmann::json& j, const SimConfig& base) {
  if (!j.is_object()) throw std::runtime_error("\"synth\" must be an object");
  const std::string profile = j.value("profile", std::string("heavy"));
  const auto count = j.value("count", std::int64_t{10000});
  const auto seed = j.value("seed", std::uint64_t{1});
  double rate = j.value("rate", -1.0);
  brsim::SynthSpec spec;
  if (profile == "heavy") {
    spec = brsim::heavy_tail_profile(count, 1.0, seed);
  } else if (profile == "cap") {
    spec = brsim::cap_bounded_profile(count, 1.0, seed);
  } else {
    throw std::runtime_error("unknown synth profile: " + profile + " (expected heavy|cap)");
  }
  if (j.contains("utilization")) {
    if (rate >= 0.0) throw std::runtime_error("give either \"rate\" or \"utilization\", not both");
    rate = brsim::arrival_rate_for_utilization(j["utilization"].get<double>(), base.num_workers,
                                               base.capacity, spec.output.mean());
  }
  if (rate < 0.0) throw std::runtime_error("synth spec needs \"rate\" or \"utilization\"");
  spec.arrival_rate = rate;
  spec.keys.pool_size = j.value("key_pool", std::uint64_t{0});
  spec.keys.repeat_prob = j.value("key_prob", 0.0);
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "profile" && key != "count" && key != "seed" && key != "rate" &&
        key != "utilization" && key != "key_pool" && key != "key_prob") {
      throw std::runtime_error("unknown synth key: " + key);
    }
  }
  return spec;
}

brsim::SweepAxes axes_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::runtime_error("\"axes\" must be an object");
  brsim::SweepAxes axes;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_array()) throw std::runtime_error("axis \"" + key + "\" must be an array");
    if (key == "G") {
      axes.num_workers = value.get<std::vector<int>>();
    } else if (key == "beta") {
      axes.beta = value.get<std::vector<double>>();
    } else if (key == "gamma") {
      axes.gamma = value.get<std::vector<double>>();
    } else if (key == "H") {
      axes.horizon = value.get<std::vector<std::int64_t>>();
    } else if (key == "router") {
      for (const auto& name : value) axes.router.push_back(brsim::parse_router_kind(name.get<std::string>()));
    } else if (key == "predictor") {
      for (const auto& name : value) {
        axes.predictor.push_back(brsim::parse_predictor_kind(name.get<std::string>()));
      }
    } else if (key == "seed") {
      axes.seed = value.get<std::vector<std::uint64_t>>();
    } else {
      throw std::runtime_error("unknown axis: " + key +
                               " (expected G, beta, gamma, H, router, predictor, seed)");
    }
  }
  return axes;
}

int cmd_run(const CLI::App* cmd, const ConfigFlags& flags, const std::string& trace_path,
            const std::string& format_name, const std::string& config_path,
            const std::string& train_path, const std::string& out_prefix,
            std::int64_t ms_per_step, std::int64_t filter_output_gt) {
  SimConfig cfg;
  if (!config_path.empty()) cfg = brsim::config_from_json(load_json_file(config_path), cfg);
  apply_config_flags(cmd, flags, cfg);

  brsim::AzureConvertOptions azure;
  azure.ms_per_step = ms_per_step;
  azure.min_output_exclusive = filter_output_gt;
  const std::vector<brsim::Request> trace =
      brsim::load_trace(trace_path, parse_format(format_name), azure);

  brsim::KeyedOutputHistory corpus;
  const brsim::KeyedOutputHistory* corpus_ptr = nullptr;
  if (!train_path.empty()) {
    corpus = brsim::KeyedOutputHistory::fit(
        brsim::load_trace(train_path, brsim::TraceFormat::Native));
    corpus_ptr = &corpus;
  }

  const brsim::RunResult result = brsim::run_trace(trace, cfg, corpus_ptr);
  std::cout << brsim::run_report_json(cfg, result.summary).dump(2) << '\n';
  if (!out_prefix.empty()) {
    brsim::write_run_report(cfg, result.summary, out_prefix + ".summary.json");
    brsim::write_steps_csv(result.records, cfg.num_workers, out_prefix + ".steps.csv");
  }
  return 0;
}

int cmd_sweep(const CLI::App* cmd, const ConfigFlags& flags, const std::string& config_path,
              const std::string& out_prefix, int threads) {
  const nlohmann::json doc = load_json_file(config_path);
  if (!doc.is_object()) throw std::runtime_error("sweep config must be a JSON object");

  brsim::SweepSpec spec;
  if (doc.contains("base")) spec.base = brsim::config_from_json(doc["base"], spec.base);
  apply_config_flags(cmd, flags, spec.base);
  if (!doc.contains("axes")) throw std::runtime_error("sweep config needs \"axes\"");
  spec.axes = axes_from_json(doc["axes"]);
  const std::string mode = doc.value("mode", std::string("cross"));
  if (mode == "cross") {
    spec.mode = brsim::SweepMode::Cross;
  } else if (mode == "grid") {
    spec.mode = brsim::SweepMode::Grid;
  } else {
    throw std::runtime_error("unknown sweep mode: " + mode + " (expected cross|grid)");
  }
  if (doc.contains("trace") && doc.contains("synth")) {
    throw std::runtime_error("give either \"trace\" or \"synth\", not both");
  }
  if (doc.contains("trace")) {
    spec.trace = brsim::load_trace(doc["trace"].get<std::string>(), brsim::TraceFormat::Native);
  } else if (doc.contains("synth")) {
    spec.synth = synth_from_json(doc["synth"], spec.base);
  } else {
    throw std::runtime_error("sweep config needs \"trace\" or \"synth\"");
  }
  spec.scale_rate_with_workers = doc.value("scale_rate_with_workers", false);
  spec.threads = doc.value("threads", 0);
  spec.max_cells = doc.value("max_cells", std::size_t{4096});
  if (cmd->count("--threads")) spec.threads = threads;
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (key != "base" && key != "axes" && key != "mode" && key != "trace" && key != "synth" &&
        key != "scale_rate_with_workers" && key != "threads" && key != "max_cells") {
      throw std::runtime_error("unknown sweep config key: " + key);
    }
  }

  const brsim::SweepReport report = brsim::run_sweep(spec);
  write_sweep_csv(report, std::cout);
  if (!out_prefix.empty()) {
    brsim::write_sweep_csv(report, out_prefix + ".sweep.csv");
    nlohmann::ordered_json echo;
    echo["base"] = brsim::config_to_json(spec.base);
    echo["axes"] = doc["axes"];
    echo["mode"] = mode;
    if (doc.contains("trace")) echo["trace"] = doc["trace"];
    if (doc.contains("synth")) echo["synth"] = doc["synth"];
    echo["scale_rate_with_workers"] = spec.scale_rate_with_workers;
    echo["threads"] = spec.threads;
    std::ofstream out(out_prefix + ".sweep.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + out_prefix + ".sweep.json");
    out << echo.dump(2) << '\n';
  }

  int failed = 0;
  for (const auto& cell : report.cells) {
    if (!cell.ok) {
      ++failed;
      std::cerr << "cell failed [" << cell.cell.label << "]: " << cell.error << '\n';
    }
  }
  return failed == 0 ? 0 : 1;
}

int cmd_gen_trace(const CLI::App* cmd, const std::string& profile, std::int64_t count, double rate,
                  double utilization, int G, int B, std::uint64_t key_pool, double key_prob,
                  std::uint64_t seed, const std::string& out_path) {
  brsim::SynthSpec spec;
  if (profile == "heavy") {
    spec = brsim::heavy_tail_profile(count, 0.0, seed);
  } else if (profile == "cap") {
    spec = brsim::cap_bounded_profile(count, 0.0, seed);
  } else {
    throw std::runtime_error("unknown profile: " + profile + " (expected heavy|cap)");
  }
  if (cmd->count("--rate") && cmd->count("--utilization")) {
    throw std::runtime_error("give either --rate or --utilization, not both");
  }
  if (cmd->count("--rate")) {
    spec.arrival_rate = rate;
  } else if (cmd->count("--utilization")) {
    spec.arrival_rate =
        brsim::arrival_rate_for_utilization(utilization, G, B, spec.output.mean());
  } else {
    throw std::runtime_error("gen-trace needs --rate or --utilization");
  }
  spec.keys.pool_size = key_pool;
  spec.keys.repeat_prob = key_prob;
  const std::vector<brsim::Request> trace = brsim::generate_synthetic(spec);
  brsim::save_trace(trace, out_path);
  std::cout << "wrote " << trace.size() << " requests to " << out_path << '\n';
  return 0;
}

int cmd_convert_azure(const std::string& in_path, const std::string& out_path,
                      std::int64_t ms_per_step, std::int64_t filter_output_gt) {
  brsim::AzureConvertOptions options;
  options.ms_per_step = ms_per_step;
  options.min_output_exclusive = filter_output_gt;
  const std::vector<brsim::Request> trace =
      brsim::load_trace(in_path, brsim::TraceFormat::AzureCsv, options);
  brsim::save_trace(trace, out_path);
  std::cout << "wrote " << trace.size() << " requests to " << out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decode-step load-balancing simulator"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  std::string run_trace_path, run_format = "native", run_config, run_train, run_out;
  std::int64_t run_ms_per_step = 60, run_filter = 0;
  CLI::App* run = app.add_subcommand("run", "replay one trace under one router");
  run->add_option("--trace", run_trace_path, "trace file")->required();
  run->add_option("--format", run_format, "native|azure (default native)");
  run->add_option("--config", run_config, "JSON config file; flags override it");
  run->add_option("--train-trace", run_train, "native trace fitted as the prediction corpus");
  run->add_option("--out", run_out, "output prefix for .summary.json and .steps.csv");
  run->add_option("--ms-per-step", run_ms_per_step, "azure format: wall-clock ms per step");
  run->add_option("--filter-output-gt", run_filter,
                  "azure format: keep rows with output above this (0 = keep all)");
  add_config_flags(run, run_flags);

  ConfigFlags sweep_flags;
  std::string sweep_config, sweep_out;
  int sweep_threads = 0;
  CLI::App* sweep = app.add_subcommand("sweep", "run every cell of a config sweep");
  sweep->add_option("--config", sweep_config, "sweep JSON file")->required();
  sweep->add_option("--out", sweep_out, "output prefix for .sweep.csv and .sweep.json");
  sweep->add_option("--threads", sweep_threads, "concurrent cells (0 = hardware)");
  add_config_flags(sweep, sweep_flags);

  std::string gen_profile = "heavy", gen_out;
  std::int64_t gen_count = 1000;
  double gen_rate = 0.0, gen_util = 0.0, gen_key_prob = 0.0;
  std::uint64_t gen_seed = 1, gen_key_pool = 0;
  int gen_G = 8, gen_B = 16;
  CLI::App* gen = app.add_subcommand("gen-trace", "generate a synthetic trace");
  gen->add_option("--profile", gen_profile, "heavy|cap");
  gen->add_option("--count", gen_count, "number of requests");
  gen->add_option("--rate", gen_rate, "arrival rate in requests per step (0 = batch at step 0)");
  gen->add_option("--utilization", gen_util, "derive the rate from --G/--B and the profile mean");
  gen->add_option("--G", gen_G, "worker count for --utilization");
  gen->add_option("--B", gen_B, "per-worker capacity for --utilization");
  gen->add_option("--key-pool", gen_key_pool, "prompt-key pool size (0 = no keys)");
  gen->add_option("--key-prob", gen_key_prob, "probability a request draws a pooled key");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output trace path")->required();

  std::string az_in, az_out;
  std::int64_t az_ms_per_step = 60, az_filter = 1000;
  CLI::App* az = app.add_subcommand("convert-azure", "convert an Azure-style CSV to the native format");
  az->add_option("--trace", az_in, "input CSV")->required();
  az->add_option("--out", az_out, "output trace path")->required();
  az->add_option("--ms-per-step", az_ms_per_step, "wall-clock ms folded into one step");
  az->add_option("--filter-output-gt", az_filter,
                 "keep rows with output above this (default 1000; 0 = keep all)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      return cmd_run(run, run_flags, run_trace_path, run_format, run_config, run_train, run_out,
                     run_ms_per_step, run_filter);
    }
    if (*sweep) return cmd_sweep(sweep, sweep_flags, sweep_config, sweep_out, sweep_threads);
    if (*gen) {
      return cmd_gen_trace(gen, gen_profile, gen_count, gen_rate, gen_util, gen_G, gen_B,
                           gen_key_pool, gen_key_prob, gen_seed, gen_out);
    }
    if (*az) return cmd_convert_azure(az_in, az_out, az_ms_per_step, az_filter);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::cerr << "error: no command\n";
  return 1;
}
