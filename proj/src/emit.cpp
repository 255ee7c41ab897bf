#include "brsim/emit.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace brsim {
namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string compact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

void finish_write(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error("failed writing output file: " + path);
}

template <typename T>
T get_integer(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    throw std::invalid_argument("config key '" + key + "' must be an integer");
  }
  return v.get<T>();
}

double get_number(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) throw std::invalid_argument("config key '" + key + "' must be a number");
  return v.get<double>();
}

std::string get_string(const nlohmann::json& v, const std::string& key) {
  if (!v.is_string()) throw std::invalid_argument("config key '" + key + "' must be a string");
  return v.get<std::string>();
}

bool get_bool(const nlohmann::json& v, const std::string& key) {
  if (!v.is_boolean()) throw std::invalid_argument("config key '" + key + "' must be a boolean");
  return v.get<bool>();
}

}  // namespace

nlohmann::ordered_json config_to_json(const SimConfig& config) {
  nlohmann::ordered_json j;
  j["G"] = config.num_workers;
  j["B"] = config.capacity;
  j["router"] = router_kind_name(config.router.kind);
  j["predictor"] = predictor_kind_name(config.router.predictor.kind);
  j["H"] = config.router.score.horizon;
  j["alpha"] = config.router.score.alpha;
  j["beta"] = config.router.score.beta;
  j["gamma"] = config.router.score.gamma;
  j["s_greedy"] = config.router.s_greedy;
  j["r_max"] = config.router.r_max;
  j["delta_t"] = config.router.predictor.refresh_period;
  j["gate_threshold"] = config.router.predictor.gate_threshold;
  if (config.router.rng_seed) {
    j["rng_seed"] = *config.router.rng_seed;
  } else {
    j["rng_seed"] = nullptr;
  }
  j["p2c_compare_count"] = config.router.p2c_compare_count;
  j["step_time_a"] = config.step_time_a;
  j["step_time_b"] = config.step_time_b;
  j["max_steps"] = config.max_steps;
  j["seed"] = config.seed;
  j["train_fraction"] = config.train_fraction;
  return j;
}

SimConfig config_from_json(const nlohmann::json& doc, SimConfig base) {
  if (!doc.is_object()) throw std::invalid_argument("config document must be a JSON object");
  SimConfig config = base;
  for (const auto& [key, value] : doc.items()) {
    if (key == "G") {
      config.num_workers = get_integer<int>(value, key);
    } else if (key == "B") {
      config.capacity = get_integer<int>(value, key);
    } else if (key == "router") {
      config.router.kind = parse_router_kind(get_string(value, key));
    } else if (key == "predictor") {
      config.router.predictor.kind = parse_predictor_kind(get_string(value, key));
    } else if (key == "H") {
      config.router.score.horizon = get_integer<Step>(value, key);
    } else if (key == "alpha") {
      config.router.score.alpha = get_number(value, key);
    } else if (key == "beta") {
      config.router.score.beta = get_number(value, key);
    } else if (key == "gamma") {
      config.router.score.gamma = get_number(value, key);
    } else if (key == "s_greedy") {
      config.router.s_greedy = get_integer<int>(value, key);
    } else if (key == "r_max") {
      config.router.r_max = get_integer<int>(value, key);
    } else if (key == "delta_t") {
      config.router.predictor.refresh_period = get_integer<Step>(value, key);
    } else if (key == "gate_threshold") {
      config.router.predictor.gate_threshold = get_number(value, key);
    } else if (key == "rng_seed") {
      if (value.is_null()) {
        config.router.rng_seed.reset();
      } else {
        config.router.rng_seed = get_integer<std::uint64_t>(value, key);
      }
    } else if (key == "p2c_compare_count") {
      config.router.p2c_compare_count = get_bool(value, key);
    } else if (key == "step_time_a") {
      config.step_time_a = get_number(value, key);
    } else if (key == "step_time_b") {
      config.step_time_b = get_number(value, key);
    } else if (key == "max_steps") {
      config.max_steps = get_integer<Step>(value, key);
    } else if (key == "seed") {
      config.seed = get_integer<std::uint64_t>(value, key);
    } else if (key == "train_fraction") {
      config.train_fraction = get_number(value, key);
    } else {
      throw std::invalid_argument("unknown config key: " + key);
    }
  }
  return config;
}

nlohmann::ordered_json summary_to_json(const RunSummary& summary) {
  nlohmann::ordered_json j;
  j["avg_imbalance_spread"] = summary.avg_imbalance_spread;
  j["avg_imbalance_total"] = summary.avg_imbalance_total;
  j["total_output_tokens"] = summary.total_output_tokens;
  j["total_time_ms"] = summary.total_time_ms;
  j["throughput_proxy"] = summary.throughput_proxy;
  j["completions"] = summary.completions;
  j["hit_step_cap"] = summary.hit_step_cap;
  return j;
}

nlohmann::ordered_json run_report_json(const SimConfig& config, const RunSummary& summary) {
  nlohmann::ordered_json j;
  j["config"] = config_to_json(config);
  j["summary"] = summary_to_json(summary);
  return j;
}

void write_run_report(const SimConfig& config, const RunSummary& summary, const std::string& path) {
  std::ofstream out = open_for_write(path);
  out << run_report_json(config, summary).dump(2) << '\n';
  finish_write(out, path);
}

void write_steps_csv(std::span<const StepRecord> records, int num_workers, std::ostream& out) {
  if (num_workers < 1) throw std::invalid_argument("num_workers must be >= 1");
  out << 'k';
  for (int g = 0; g < num_workers; ++g) out << ",load_" << g;
  out << ",imbalance_total,imbalance_spread,step_time\n";
  for (const StepRecord& r : records) {
    if (static_cast<int>(r.loads.size()) != num_workers) {
      throw std::invalid_argument("step record worker count does not match num_workers");
    }
    out << r.k;
    for (Tokens load : r.loads) out << ',' << load;
    out << ',' << r.imbalance_total << ',' << r.imbalance_spread << ',' << fixed6(r.step_time_ms)
        << '\n';
  }
}

void write_steps_csv(std::span<const StepRecord> records, int num_workers,
                     const std::string& path) {
  std::ofstream out = open_for_write(path);
  write_steps_csv(records, num_workers, out);
  finish_write(out, path);
}

void write_sweep_csv(const SweepReport& report, std::ostream& out) {
  out << "label,G,B,router,predictor,H,alpha,beta,gamma,s_greedy,r_max,delta_t,seed,status,error,"
         "avg_imbalance_spread,avg_imbalance_total,total_output_tokens,total_time_ms,"
         "throughput_proxy,completions,hit_step_cap\n";
  for (const SweepCellResult& cell : report.cells) {
    const SimConfig& c = cell.cell.config;
    out << csv_escape(cell.cell.label) << ',' << c.num_workers << ',' << c.capacity << ','
        << router_kind_name(c.router.kind) << ',' << predictor_kind_name(c.router.predictor.kind)
        << ',' << c.router.score.horizon << ',' << compact(c.router.score.alpha) << ','
        << compact(c.router.score.beta) << ',' << compact(c.router.score.gamma) << ','
        << c.router.s_greedy << ',' << c.router.r_max << ',' << c.router.predictor.refresh_period
        << ',' << c.seed << ',';
    if (cell.ok) {
      const RunSummary& s = cell.summary;
      out << "ok,," << fixed6(s.avg_imbalance_spread) << ',' << fixed6(s.avg_imbalance_total)
          << ',' << s.total_output_tokens << ',' << fixed6(s.total_time_ms) << ','
          << fixed6(s.throughput_proxy) << ',' << s.completions << ','
          << (s.hit_step_cap ? 1 : 0) << '\n';
    } else {
      out << "error," << csv_escape(cell.error) << ",,,,,,,\n";
    }
  }
}

void write_sweep_csv(const SweepReport& report, const std::string& path) {
  std::ofstream out = open_for_write(path);
  write_sweep_csv(report, out);
  finish_write(out, path);
}

}  // namespace brsim
