#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "brsim/emit.hpp"
#include "brsim/simulator.hpp"
#include "brsim/sweep.hpp"
#include "brsim/synthetic.hpp"
#include "brsim/trace_io.hpp"

using namespace brsim;

namespace {

Request req(RequestId id, Step arrival, Tokens prefill, Tokens output,
            std::optional<std::uint64_t> key = std::nullopt) {
  Request r;
  r.id = id;
  r.arrival_step = arrival;
  r.prefill_len = prefill;
  r.output_len = output;
  r.prompt_key = key;
  return r;
}

void check_traces_equal(const std::vector<Request>& a, const std::vector<Request>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].arrival_step == b[i].arrival_step);
    CHECK(a[i].prefill_len == b[i].prefill_len);
    CHECK(a[i].output_len == b[i].output_len);
    CHECK(a[i].prompt_key == b[i].prompt_key);
  }
}

template <typename Fn>
void expect_error(Fn&& fn, const std::string& needle) {
  try {
    fn();
    FAIL_CHECK("expected an exception mentioning '" << needle << "'");
  } catch (const std::exception& e) {
    const std::string what = e.what();
    CHECK_MESSAGE(what.find(needle) != std::string::npos,
                  "message '" << what << "' lacks '" << needle << "'");
  }
}

struct TempPath {
  std::filesystem::path path;
  explicit TempPath(const std::string& name)
      : path(std::filesystem::temp_directory_path() / name) {}
  ~TempPath() {
    std::error_code ec;
    std::filesystem::remove(path, ec);
  }
  std::string str() const { return path.string(); }
};

}  // namespace

// ---------------------------------------------------------------------------
// Native trace format

TEST_CASE("native traces round-trip through save and parse") {
  const std::vector<Request> trace = {
      req(1, 0, 5, 7),
      req(2, 3, 9, 2, 42),
      req(3, 3, 1, 1),
  };
  std::ostringstream out;
  save_trace(trace, out);

  const std::string text = out.str();
  std::istringstream first_line(text);
  std::string line;
  REQUIRE(std::getline(first_line, line));
  CHECK(line == R"({"id":1,"arrival_step":0,"prompt_tokens":5,"output_tokens":7})");

  std::istringstream in(text);
  check_traces_equal(parse_native_trace(in, "trace"), trace);
}

TEST_CASE("native traces round-trip through a file") {
  const std::vector<Request> trace = {req(7, 2, 11, 3, 5), req(9, 0, 4, 8)};
  TempPath tmp("brsim_test_native.jsonl");
  save_trace(trace, tmp.str());
  // Parsing sorts by (arrival_step, id), so id 9 (arrival 0) comes first.
  const std::vector<Request> loaded = load_trace(tmp.str(), TraceFormat::Native);
  check_traces_equal(loaded, {req(9, 0, 4, 8), req(7, 2, 11, 3, 5)});
}

TEST_CASE("native parser reports the offending line") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_native_trace(in, "trace");
  };
  const std::string good = R"({"id":1,"arrival_step":0,"prompt_tokens":5,"output_tokens":7})";

  expect_error([&] { parse(good + "\nnot json\n"); }, "trace:2:");
  expect_error([&] { parse(good + "\n[1,2,3]\n"); }, "not an object");
  expect_error(
      [&] { parse(R"({"id":1,"arrival_step":0,"prompt_tokens":5,"output_tokens":0})"); },
      "output_tokens");
  expect_error(
      [&] { parse(R"({"id":1,"arrival_step":0,"prompt_tokens":0,"output_tokens":3})"); },
      "prompt_tokens");
  expect_error(
      [&] { parse(R"({"id":1,"arrival_step":-2,"prompt_tokens":5,"output_tokens":3})"); },
      "arrival_step");
  expect_error([&] { parse(R"({"arrival_step":0,"prompt_tokens":5,"output_tokens":3})"); },
               "missing field 'id'");
  expect_error(
      [&] {
        parse(R"({"id":1,"arrival_step":0,"prompt_tokens":5,"output_tokens":7,"prompt_key":"x"})");
      },
      "prompt_key");
  expect_error([&] { parse(good + "\n" + good); }, "duplicate request id");
}

TEST_CASE("native parser skips blank lines and sorts arrivals") {
  const std::string text =
      "\n"
      R"({"id":3,"arrival_step":5,"prompt_tokens":2,"output_tokens":2})" "\n"
      "\n"
      R"({"id":1,"arrival_step":0,"prompt_tokens":2,"output_tokens":2})" "\n"
      R"({"id":2,"arrival_step":5,"prompt_tokens":2,"output_tokens":2})" "\n";
  std::istringstream in(text);
  const std::vector<Request> trace = parse_native_trace(in, "trace");
  REQUIRE(trace.size() == 3);
  CHECK(trace[0].id == 1);
  CHECK(trace[1].id == 2);
  CHECK(trace[2].id == 3);
}

// ---------------------------------------------------------------------------
// Azure CSV conversion

TEST_CASE("azure rows are binned into steps relative to the first arrival") {
  const std::string csv =
      "TIMESTAMP,ContextTokens,GeneratedTokens\n"
      "2023-11-16 18:00:00.000,100,1200\n"
      "2023-11-16 18:00:00.059,200,1500\n"
      "2023-11-16 18:00:00.060,300,1800\n"
      "2023-11-16 18:00:00.061,400,2000\n"
      "2023-11-16 18:00:00.120,500,2200\n";
  std::istringstream in(csv);
  const std::vector<Request> trace = parse_azure_csv(in, "azure", {});
  REQUIRE(trace.size() == 5);
  const std::vector<Step> want_steps = {0, 0, 1, 1, 2};
  for (std::size_t i = 0; i < trace.size(); ++i) {
    CHECK(trace[i].id == static_cast<RequestId>(i));
    CHECK(trace[i].arrival_step == want_steps[i]);
    CHECK(trace[i].prefill_len == static_cast<Tokens>(100 * (i + 1)));
  }
  CHECK(trace[0].output_len == 1200);
  CHECK(trace[4].output_len == 2200);
}

TEST_CASE("azure timestamps accept epoch milliseconds and integral decimals") {
  const std::string csv =
      "TIMESTAMP,ContextTokens,GeneratedTokens\n"
      "1000,50,700\n"
      "1059,512.0,800\n"
      "1120,70,900\n";
  std::istringstream in(csv);
  const std::vector<Request> trace = parse_azure_csv(in, "azure", {});
  REQUIRE(trace.size() == 3);
  CHECK(trace[0].arrival_step == 0);
  CHECK(trace[1].arrival_step == 0);
  CHECK(trace[2].arrival_step == 2);
  CHECK(trace[1].prefill_len == 512);
}

TEST_CASE("azure timestamps accept 'T' separators and fractional seconds") {
  const std::string csv =
      "TIMESTAMP,ContextTokens,GeneratedTokens\n"
      "2023-11-16 18:00:00.250,10,100\n"
      "2023-11-16T18:00:01,20,200\n";
  AzureConvertOptions options;
  options.ms_per_step = 750;
  std::istringstream in(csv);
  const std::vector<Request> trace = parse_azure_csv(in, "azure", options);
  REQUIRE(trace.size() == 2);
  CHECK(trace[0].arrival_step == 0);
  CHECK(trace[1].arrival_step == 1);  // 750 ms later
}

TEST_CASE("azure parser handles quoted fields, CRLF, and a BOM") {
  const std::string csv =
      "\xEF\xBB\xBFTIMESTAMP,ContextTokens,GeneratedTokens\r\n"
      "\"2023-11-16 18:00:00\",128,\"1200\"\r\n"
      "2023-11-16 18:00:01,256,1300\r\n";
  std::istringstream in(csv);
  const std::vector<Request> trace = parse_azure_csv(in, "azure", {});
  REQUIRE(trace.size() == 2);
  CHECK(trace[0].prefill_len == 128);
  CHECK(trace[0].output_len == 1200);
  CHECK(trace[1].arrival_step == 16);  // 1000 ms at 60 ms per step
}

TEST_CASE("azure output filter drops rows before any other validation") {
  const std::string csv =
      "TIMESTAMP,ContextTokens,GeneratedTokens\n"
      "garbage-timestamp,10,500\n"
      "1000,20,1500\n"
      "2000,30,2500\n";
  AzureConvertOptions options;
  options.min_output_exclusive = 1000;
  std::istringstream in(csv);
  const std::vector<Request> trace = parse_azure_csv(in, "azure", options);
  REQUIRE(trace.size() == 2);
  CHECK(trace[0].id == 0);
  CHECK(trace[0].arrival_step == 0);
  CHECK(trace[0].output_len == 1500);
  CHECK(trace[1].id == 1);
  CHECK(trace[1].arrival_step == 16);  // binned relative to the first survivor

  // Without the filter the same garbage row is a hard error.
  std::istringstream strict(csv);
  expect_error([&] { parse_azure_csv(strict, "azure", {}); }, "azure:2:");
}

TEST_CASE("azure parser rejects structural problems") {
  expect_error(
      [] {
        std::istringstream in("TIMESTAMP,ContextTokens\n1000,10\n");
        parse_azure_csv(in, "azure", {});
      },
      "header must contain");
  expect_error(
      [] {
        std::istringstream in("TIMESTAMP,ContextTokens,GeneratedTokens\n1000,20\n");
        parse_azure_csv(in, "azure", {});
      },
      "too few columns");
  expect_error(
      [] {
        std::istringstream in("");
        parse_azure_csv(in, "azure", {});
      },
      "empty file");
  expect_error(
      [] {
        std::istringstream in("TIMESTAMP,ContextTokens,GeneratedTokens\n1000,0,1200\n");
        parse_azure_csv(in, "azure", {});
      },
      "ContextTokens");
  AzureConvertOptions bad;
  bad.ms_per_step = 0;
  std::istringstream in("TIMESTAMP,ContextTokens,GeneratedTokens\n");
  CHECK_THROWS_AS(parse_azure_csv(in, "azure", bad), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Synthetic workloads

TEST_CASE("synthetic generation is deterministic and ordered") {
  SynthSpec spec;
  spec.count = 200;
  spec.arrival_rate = 0.8;
  spec.prompt = LengthDist{DistKind::Uniform, 1, 50, 1, std::numeric_limits<Tokens>::max()};
  spec.output = LengthDist{DistKind::Uniform, 1, 30, 1, std::numeric_limits<Tokens>::max()};
  spec.seed = 12;

  const std::vector<Request> a = generate_synthetic(spec);
  const std::vector<Request> b = generate_synthetic(spec);
  check_traces_equal(a, b);

  REQUIRE(a.size() == 200);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == static_cast<RequestId>(i));
    if (i > 0) CHECK(a[i].arrival_step >= a[i - 1].arrival_step);
    CHECK(a[i].prefill_len >= 1);
    CHECK(a[i].prefill_len <= 50);
    CHECK(a[i].output_len >= 1);
    CHECK(a[i].output_len <= 30);
  }

  SynthSpec other = spec;
  other.seed = 13;
  const std::vector<Request> c = generate_synthetic(other);
  bool any_differs = false;
  for (std::size_t i = 0; i < c.size(); ++i) {
    any_differs = any_differs || c[i].prefill_len != a[i].prefill_len;
  }
  CHECK(any_differs);
}

TEST_CASE("zero arrival rate means one big batch") {
  SynthSpec spec;
  spec.count = 50;
  spec.arrival_rate = 0.0;
  spec.prompt = LengthDist{DistKind::Constant, 7, 0, 1, std::numeric_limits<Tokens>::max()};
  spec.output = LengthDist{DistKind::Constant, 3, 0, 1, std::numeric_limits<Tokens>::max()};
  for (const Request& r : generate_synthetic(spec)) {
    CHECK(r.arrival_step == 0);
    CHECK(r.prefill_len == 7);
    CHECK(r.output_len == 3);
    CHECK_FALSE(r.prompt_key.has_value());
  }
}

TEST_CASE("doubling the arrival rate compresses the schedule") {
  SynthSpec slow;
  slow.count = 400;
  slow.arrival_rate = 1.0;
  slow.seed = 4;
  SynthSpec fast = slow;
  fast.arrival_rate = 2.0;
  const Step slow_span = generate_synthetic(slow).back().arrival_step;
  const Step fast_span = generate_synthetic(fast).back().arrival_step;
  CHECK(fast_span < slow_span);
  CHECK(fast_span >= slow_span / 3);
}

TEST_CASE("prompt keys follow the pool and repeat probability") {
  SynthSpec spec;
  spec.count = 300;
  spec.arrival_rate = 1.0;
  spec.seed = 6;

  spec.keys = KeySpec{1, 1.0};
  for (const Request& r : generate_synthetic(spec)) {
    REQUIRE(r.prompt_key.has_value());
    CHECK(*r.prompt_key == 0);
  }

  spec.keys = KeySpec{5, 0.0};
  for (const Request& r : generate_synthetic(spec)) CHECK_FALSE(r.prompt_key.has_value());

  spec.keys = KeySpec{5, 0.5};
  int keyed = 0;
  for (const Request& r : generate_synthetic(spec)) {
    if (r.prompt_key) {
      CHECK(*r.prompt_key < 5);
      ++keyed;
    }
  }
  CHECK(keyed > 100);
  CHECK(keyed < 200);
}

TEST_CASE("sampled lengths track the analytic means") {
  std::mt19937_64 rng(17);
  const int n = 10000;

  LengthDist uniform{DistKind::Uniform, 1, 99, 1, std::numeric_limits<Tokens>::max()};
  CHECK(uniform.mean() == doctest::Approx(50.0));
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += static_cast<double>(sample_length(uniform, rng));
  CHECK(sum / n == doctest::Approx(50.0).epsilon(0.02));

  LengthDist lognorm{DistKind::LogNormal, 3.0, 0.5, 1, std::numeric_limits<Tokens>::max()};
  CHECK(lognorm.mean() == doctest::Approx(std::exp(3.125)));
  sum = 0.0;
  for (int i = 0; i < n; ++i) sum += static_cast<double>(sample_length(lognorm, rng));
  CHECK(sum / n == doctest::Approx(std::exp(3.125)).epsilon(0.05));

  LengthDist constant{DistKind::Constant, 7, 0, 1, std::numeric_limits<Tokens>::max()};
  CHECK(constant.mean() == doctest::Approx(7.0));
  CHECK(sample_length(constant, rng) == 7);
}

TEST_CASE("workload profiles have the advertised shapes") {
  const SynthSpec heavy = heavy_tail_profile(100, 1.0, 3);
  CHECK(heavy.output.mean() == doctest::Approx(1184.86).epsilon(0.01));
  CHECK(heavy.prompt.mean() == doctest::Approx(3199.6).epsilon(0.01));

  const SynthSpec cap = cap_bounded_profile(200, 1.0, 3);
  bool at_floor = false;
  bool at_cap = false;
  for (const Request& r : generate_synthetic(cap)) {
    CHECK(r.output_len >= 1001);
    CHECK(r.output_len <= 2048);
    at_floor = at_floor || r.output_len == 1001;
    at_cap = at_cap || r.output_len == 2048;
  }
  CHECK(at_floor);
  CHECK(at_cap);
}

TEST_CASE("synthetic specs are validated") {
  SynthSpec spec;
  spec.count = -1;
  CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
  spec.count = 10;
  spec.arrival_rate = -0.5;
  CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
  spec.arrival_rate = 1.0;
  spec.keys = KeySpec{0, 0.5};
  CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
  spec.keys = KeySpec{5, 1.5};
  CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
  spec.keys = KeySpec{};
  spec.prompt = LengthDist{DistKind::Uniform, 9, 3, 1, std::numeric_limits<Tokens>::max()};
  CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
  spec.prompt = LengthDist{DistKind::Constant, 5, 0, 10, 2};
  CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
}

TEST_CASE("arrival rate for a target utilization") {
  CHECK(arrival_rate_for_utilization(0.9, 8, 16, 1000.0) == doctest::Approx(0.1152));
  CHECK(arrival_rate_for_utilization(1.0, 1, 1, 1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(arrival_rate_for_utilization(0.0, 8, 16, 1000.0), std::invalid_argument);
  CHECK_THROWS_AS(arrival_rate_for_utilization(0.9, 0, 16, 1000.0), std::invalid_argument);
  CHECK_THROWS_AS(arrival_rate_for_utilization(0.9, 8, 16, 0.0), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Sweeps

TEST_CASE("cross sweeps vary one axis at a time and merge duplicates") {
  SweepSpec spec;
  spec.base.num_workers = 8;  // base β=48, γ=0.9
  spec.axes.num_workers = {4, 8, 16};
  spec.axes.beta = {24.0, 48.0, 96.0};
  spec.axes.gamma = {0.8, 0.9, 0.99};

  const std::vector<SweepCell> cells = expand_cells(spec);
  const std::vector<std::string> want = {
      "G=4,beta=48,gamma=0.9",  "G=8,beta=48,gamma=0.9",  "G=16,beta=48,gamma=0.9",
      "G=8,beta=24,gamma=0.9",  "G=8,beta=96,gamma=0.9",  "G=8,beta=48,gamma=0.8",
      "G=8,beta=48,gamma=0.99",
  };
  REQUIRE(cells.size() == want.size());
  for (std::size_t i = 0; i < cells.size(); ++i) CHECK(cells[i].label == want[i]);
  CHECK(cells[2].config.num_workers == 16);
  CHECK(cells[3].config.router.score.beta == doctest::Approx(24.0));
  CHECK(cells[3].config.num_workers == 8);
}

TEST_CASE("grid sweeps take the cartesian product in axis order") {
  SweepSpec spec;
  spec.mode = SweepMode::Grid;
  spec.axes.router = {RouterKind::Jsq, RouterKind::Br0};
  spec.axes.seed = {1, 2};

  const std::vector<SweepCell> cells = expand_cells(spec);
  const std::vector<std::string> want = {
      "router=jsq,seed=1",
      "router=jsq,seed=2",
      "router=br0,seed=1",
      "router=br0,seed=2",
  };
  REQUIRE(cells.size() == want.size());
  for (std::size_t i = 0; i < cells.size(); ++i) CHECK(cells[i].label == want[i]);

  SweepSpec dup;
  dup.mode = SweepMode::Grid;
  dup.axes.beta = {48.0, 48.0};
  CHECK(expand_cells(dup).size() == 1);
}

TEST_CASE("sweep expansion rejects empty and oversized requests") {
  SweepSpec spec;
  CHECK_THROWS_AS(expand_cells(spec), std::invalid_argument);
  spec.mode = SweepMode::Grid;
  spec.axes.router = {RouterKind::Jsq, RouterKind::Br0};
  spec.axes.seed = {1, 2};
  spec.max_cells = 3;
  CHECK_THROWS_AS(expand_cells(spec), std::invalid_argument);
  spec.max_cells = 0;
  CHECK_THROWS_AS(expand_cells(spec), std::invalid_argument);
}

TEST_CASE("run_sweep isolates failing cells") {
  std::vector<Request> trace;
  for (int i = 0; i < 20; ++i) trace.push_back(req(i + 1, i / 4, 5 + i % 3, 3 + i % 4));

  SweepSpec spec;
  spec.base.num_workers = 2;
  spec.base.capacity = 4;
  spec.base.router.kind = RouterKind::Jsq;
  spec.axes.num_workers = {2, 0};
  spec.trace = trace;
  spec.threads = 2;

  const SweepReport report = run_sweep(spec);
  REQUIRE(report.cells.size() == 2);
  CHECK(report.cells[0].ok);
  CHECK(report.cells[0].summary.completions == 20);
  CHECK_FALSE(report.cells[1].ok);
  CHECK(report.cells[1].error.find("worker") != std::string::npos);
}

TEST_CASE("run_sweep is deterministic under concurrency") {
  std::vector<Request> trace;
  for (int i = 0; i < 30; ++i) trace.push_back(req(i + 1, i / 3, 4 + i % 5, 2 + i % 6));

  SweepSpec spec;
  spec.base.num_workers = 2;
  spec.base.capacity = 4;
  spec.base.router.kind = RouterKind::Br0;
  spec.axes.seed = {1, 2, 3, 4, 5, 6};
  spec.trace = trace;

  spec.threads = 1;
  const SweepReport serial = run_sweep(spec);
  spec.threads = 4;
  const SweepReport parallel = run_sweep(spec);

  REQUIRE(serial.cells.size() == 6);
  REQUIRE(parallel.cells.size() == 6);
  for (std::size_t i = 0; i < serial.cells.size(); ++i) {
    CHECK(serial.cells[i].cell.label == parallel.cells[i].cell.label);
    REQUIRE(serial.cells[i].ok);
    REQUIRE(parallel.cells[i].ok);
    CHECK(serial.cells[i].summary.avg_imbalance_spread ==
          doctest::Approx(parallel.cells[i].summary.avg_imbalance_spread).epsilon(0.0));
    CHECK(serial.cells[i].summary.total_output_tokens ==
          parallel.cells[i].summary.total_output_tokens);
  }
}

TEST_CASE("run_sweep validates its workload") {
  SweepSpec spec;
  spec.axes.seed = {1};
  CHECK_THROWS_AS(run_sweep(spec), std::invalid_argument);

  spec.trace = {req(1, 0, 3, 2)};
  spec.scale_rate_with_workers = true;
  CHECK_THROWS_AS(run_sweep(spec), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Emission

TEST_CASE("steps CSV is byte-stable") {
  std::vector<StepRecord> records(2);
  records[0].k = 0;
  records[0].loads = {3, 0};
  records[0].imbalance_total = 3;
  records[0].imbalance_spread = 3;
  records[0].admissions = 1;
  records[0].step_time_ms = 50.03;
  records[1].k = 1;
  records[1].loads = {4, 2};
  records[1].imbalance_total = 2;
  records[1].imbalance_spread = 2;
  records[1].admissions = 1;
  records[1].departures = 1;
  records[1].step_time_ms = 50.04;

  const std::string want =
      "k,load_0,load_1,imbalance_total,imbalance_spread,step_time\n"
      "0,3,0,3,3,50.030000\n"
      "1,4,2,2,2,50.040000\n";
  std::ostringstream a;
  write_steps_csv(records, 2, a);
  CHECK(a.str() == want);
  std::ostringstream b;
  write_steps_csv(records, 2, b);
  CHECK(b.str() == a.str());

  std::ostringstream empty;
  write_steps_csv(std::vector<StepRecord>{}, 3, empty);
  CHECK(empty.str() == "k,load_0,load_1,load_2,imbalance_total,imbalance_spread,step_time\n");

  std::ostringstream sink;
  CHECK_THROWS_AS(write_steps_csv(records, 3, sink), std::invalid_argument);
  CHECK_THROWS_AS(write_steps_csv(records, 0, sink), std::invalid_argument);
}

TEST_CASE("config JSON round-trips every field") {
  SimConfig config;
  config.num_workers = 4;
  config.capacity = 8;
  config.router.kind = RouterKind::Brh;
  config.router.predictor.kind = PredictorKind::Survival;
  config.router.score.horizon = 12;
  config.router.score.alpha = 1.5;
  config.router.score.beta = 24.0;
  config.router.score.gamma = 0.8;
  config.router.s_greedy = 3;
  config.router.r_max = 6;
  config.router.predictor.refresh_period = 7;
  config.router.predictor.gate_threshold = 0.4;
  config.router.rng_seed = 99;
  config.router.p2c_compare_count = true;
  config.step_time_a = 0.02;
  config.step_time_b = 25.0;
  config.max_steps = 1234;
  config.seed = 77;
  config.train_fraction = 0.25;

  const nlohmann::ordered_json doc = config_to_json(config);
  const SimConfig back = config_from_json(doc);
  CHECK(back.num_workers == config.num_workers);
  CHECK(back.capacity == config.capacity);
  CHECK(back.router.kind == config.router.kind);
  CHECK(back.router.predictor.kind == config.router.predictor.kind);
  CHECK(back.router.score.horizon == config.router.score.horizon);
  CHECK(back.router.score.alpha == config.router.score.alpha);
  CHECK(back.router.score.beta == config.router.score.beta);
  CHECK(back.router.score.gamma == config.router.score.gamma);
  CHECK(back.router.s_greedy == config.router.s_greedy);
  CHECK(back.router.r_max == config.router.r_max);
  CHECK(back.router.predictor.refresh_period == config.router.predictor.refresh_period);
  CHECK(back.router.predictor.gate_threshold == config.router.predictor.gate_threshold);
  REQUIRE(back.router.rng_seed.has_value());
  CHECK(*back.router.rng_seed == 99);
  CHECK(back.router.p2c_compare_count == config.router.p2c_compare_count);
  CHECK(back.step_time_a == config.step_time_a);
  CHECK(back.step_time_b == config.step_time_b);
  CHECK(back.max_steps == config.max_steps);
  CHECK(back.seed == config.seed);
  CHECK(back.train_fraction == config.train_fraction);

  // Unset rng_seed is serialized as null and deserialized as unset.
  const nlohmann::ordered_json defaults = config_to_json(SimConfig{});
  CHECK(defaults.at("rng_seed").is_null());
  SimConfig seeded = config;
  const SimConfig cleared = config_from_json(defaults, seeded);
  CHECK_FALSE(cleared.router.rng_seed.has_value());
}

TEST_CASE("config overlays touch only the keys present") {
  SimConfig base;
  base.num_workers = 4;
  const SimConfig merged = config_from_json(nlohmann::json{{"beta", 12.0}}, base);
  CHECK(merged.num_workers == 4);
  CHECK(merged.router.score.beta == doctest::Approx(12.0));

  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"bogus", 1}}), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"G", "eight"}}), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"router", "zigzag"}}), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), std::invalid_argument);
}

TEST_CASE("run reports embed the resolved config") {
  RunSummary summary;
  summary.avg_imbalance_spread = 1.5;
  summary.total_output_tokens = 100;
  summary.completions = 9;

  const nlohmann::ordered_json j = run_report_json(SimConfig{}, summary);
  CHECK(j.at("config").at("G") == 8);
  CHECK(j.at("summary").at("completions") == 9);
  CHECK(j.at("summary").at("avg_imbalance_spread") == doctest::Approx(1.5));
  CHECK(j.at("summary").at("hit_step_cap") == false);

  TempPath tmp("brsim_test_report.json");
  write_run_report(SimConfig{}, summary, tmp.str());
  std::ifstream in(tmp.str());
  REQUIRE(in.good());
  const nlohmann::json parsed = nlohmann::json::parse(in);
  CHECK(parsed.at("summary").at("total_output_tokens") == 100);
}

TEST_CASE("sweep CSV carries metrics for good cells and messages for bad ones") {
  SweepReport report;
  report.cells.resize(2);

  report.cells[0].cell.label = "beta=24";
  report.cells[0].cell.config.router.score.beta = 24.0;
  report.cells[0].ok = true;
  report.cells[0].summary.avg_imbalance_spread = 1.5;
  report.cells[0].summary.avg_imbalance_total = 3.25;
  report.cells[0].summary.total_output_tokens = 100;
  report.cells[0].summary.total_time_ms = 200.5;
  report.cells[0].summary.throughput_proxy = 3.75;
  report.cells[0].summary.completions = 9;

  report.cells[1].cell.label = "G=0";
  report.cells[1].cell.config.num_workers = 0;
  report.cells[1].ok = false;
  report.cells[1].error = "bad \"cell\", sad";

  const std::string want =
      "label,G,B,router,predictor,H,alpha,beta,gamma,s_greedy,r_max,delta_t,seed,status,error,"
      "avg_imbalance_spread,avg_imbalance_total,total_output_tokens,total_time_ms,"
      "throughput_proxy,completions,hit_step_cap\n"
      "beta=24,8,16,jsq,oracle,0,1,24,0.9,-1,4,0,1,ok,,"
      "1.500000,3.250000,100,200.500000,3.750000,9,0\n"
      "G=0,0,16,jsq,oracle,0,1,48,0.9,-1,4,0,1,error,\"bad \"\"cell\"\", sad\",,,,,,,\n";
  std::ostringstream out;
  write_sweep_csv(report, out);
  CHECK(out.str() == want);
}
