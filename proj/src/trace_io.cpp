#include "brsim/trace_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace brsim {
namespace {

[[noreturn]] void fail_at(const std::string& source, std::size_t line_no, const std::string& what) {
  throw std::runtime_error(source + ":" + std::to_string(line_no) + ": " + what);
}

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::optional<std::int64_t> parse_int(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno == 0 && end == s.c_str() + s.size()) return v;
  // Tolerate integral-valued decimals ("512.0") seen in some CSV exports.
  errno = 0;
  const double d = std::strtod(s.c_str(), &end);
  if (errno != 0 || end != s.c_str() + s.size()) return std::nullopt;
  if (!std::isfinite(d) || d != std::floor(d) || std::fabs(d) > 9.0e18) return std::nullopt;
  return static_cast<std::int64_t>(d);
}

// Days since 1970-01-01 for a proleptic Gregorian civil date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

// Accepts epoch-milliseconds or "YYYY-MM-DD HH:MM:SS[.fff]" (space or 'T').
std::optional<std::int64_t> parse_timestamp_ms(const std::string& raw) {
  const std::string s = trim(raw);
  if (const auto ms = parse_int(s)) return ms;
  int y = 0, mo = 0, d = 0, hh = 0, mi = 0, ss = 0;
  int consumed = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%*1[ T]%2d:%2d:%2d%n", &y, &mo, &d, &hh, &mi, &ss,
                  &consumed) != 6) {
    return std::nullopt;
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || hh < 0 || hh > 23 || mi < 0 || mi > 59 ||
      ss < 0 || ss > 60) {
    return std::nullopt;
  }
  std::int64_t frac_ms = 0;
  std::string rest = s.substr(static_cast<std::size_t>(consumed));
  if (!rest.empty() && rest[0] == '.') {
    std::size_t i = 1;
    std::int64_t scale = 100;
    while (i < rest.size() && std::isdigit(static_cast<unsigned char>(rest[i]))) {
      if (scale > 0) frac_ms += (rest[i] - '0') * scale;
      scale /= 10;
      ++i;
    }
    if (i == 1) return std::nullopt;
    rest = rest.substr(i);
  }
  if (!trim(rest).empty()) return std::nullopt;
  const std::int64_t days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
  return ((days * 24 + hh) * 60 + mi) * 60000 + ss * 1000 + frac_ms;
}

// Minimal CSV field splitter: handles double-quoted fields with "" escapes.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

void strip_line_noise(std::string& line, bool first) {
  if (first && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

void sort_and_check_ids(std::vector<Request>& trace, const std::string& source) {
  std::unordered_set<std::int64_t> seen;
  seen.reserve(trace.size());
  for (const Request& r : trace) {
    if (!seen.insert(r.id).second) {
      throw std::runtime_error(source + ": duplicate request id " + std::to_string(r.id));
    }
  }
  std::stable_sort(trace.begin(), trace.end(), [](const Request& a, const Request& b) {
    if (a.arrival_step != b.arrival_step) return a.arrival_step < b.arrival_step;
    return a.id < b.id;
  });
}

}  // namespace

std::vector<Request> parse_native_trace(std::istream& in, const std::string& source_name) {
  std::vector<Request> trace;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_line_noise(line, line_no == 1);
    if (trim(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail_at(source_name, line_no, std::string("malformed record: ") + e.what());
    }
    if (!rec.is_object()) fail_at(source_name, line_no, "record is not an object");
    for (const char* key : {"id", "arrival_step", "prompt_tokens", "output_tokens"}) {
      if (!rec.contains(key)) fail_at(source_name, line_no, std::string("missing field '") + key + "'");
      if (!rec[key].is_number_integer() && !rec[key].is_number_unsigned()) {
        fail_at(source_name, line_no, std::string("field '") + key + "' is not an integer");
      }
    }
    Request r;
    r.id = rec["id"].get<std::int64_t>();
    r.arrival_step = rec["arrival_step"].get<std::int64_t>();
    r.prefill_len = rec["prompt_tokens"].get<Tokens>();
    r.output_len = rec["output_tokens"].get<Tokens>();
    if (rec.contains("prompt_key")) {
      if (!rec["prompt_key"].is_null()) {
        if (!rec["prompt_key"].is_number_integer() && !rec["prompt_key"].is_number_unsigned()) {
          fail_at(source_name, line_no, "field 'prompt_key' is not an integer");
        }
        r.prompt_key = rec["prompt_key"].get<std::uint64_t>();
      }
    }
    if (r.arrival_step < 0) fail_at(source_name, line_no, "arrival_step is negative");
    if (r.prefill_len < 1) fail_at(source_name, line_no, "prompt_tokens must be >= 1");
    if (r.output_len < 1) fail_at(source_name, line_no, "output_tokens must be >= 1");
    trace.push_back(r);
  }
  sort_and_check_ids(trace, source_name);
  return trace;
}

std::vector<Request> parse_azure_csv(std::istream& in, const std::string& source_name,
                                     const AzureConvertOptions& options) {
  if (options.ms_per_step < 1) throw std::invalid_argument("ms_per_step must be >= 1");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(source_name + ": empty file");
  strip_line_noise(line, true);
  const std::vector<std::string> header = split_csv(line);
  std::size_t ts_col = header.size(), ctx_col = header.size(), gen_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name = lower(trim(header[i]));
    if (name == "timestamp") ts_col = i;
    else if (name == "contexttokens") ctx_col = i;
    else if (name == "generatedtokens") gen_col = i;
  }
  if (ts_col == header.size() || ctx_col == header.size() || gen_col == header.size()) {
    throw std::runtime_error(source_name +
                             ": header must contain TIMESTAMP, ContextTokens, GeneratedTokens");
  }

  struct Row {
    std::int64_t ts_ms;
    Tokens prompt;
    Tokens output;
  };
  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_line_noise(line, false);
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv(line);
    const std::size_t need = std::max({ts_col, ctx_col, gen_col});
    if (fields.size() <= need) fail_at(source_name, line_no, "too few columns");
    const auto output = parse_int(fields[gen_col]);
    if (!output) fail_at(source_name, line_no, "unparsable GeneratedTokens");
    if (options.min_output_exclusive > 0 && *output <= options.min_output_exclusive) continue;
    const auto ts = parse_timestamp_ms(fields[ts_col]);
    if (!ts) fail_at(source_name, line_no, "unparsable TIMESTAMP");
    const auto prompt = parse_int(fields[ctx_col]);
    if (!prompt) fail_at(source_name, line_no, "unparsable ContextTokens");
    if (*prompt < 1) fail_at(source_name, line_no, "ContextTokens must be >= 1");
    if (*output < 1) fail_at(source_name, line_no, "GeneratedTokens must be >= 1");
    rows.push_back(Row{*ts, *prompt, *output});
  }

  std::vector<Request> trace;
  trace.reserve(rows.size());
  if (!rows.empty()) {
    std::int64_t min_ts = rows.front().ts_ms;
    for (const Row& row : rows) min_ts = std::min(min_ts, row.ts_ms);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      Request r;
      r.id = static_cast<std::int64_t>(i);
      r.arrival_step = (rows[i].ts_ms - min_ts) / options.ms_per_step;
      r.prefill_len = rows[i].prompt;
      r.output_len = rows[i].output;
      trace.push_back(r);
    }
  }
  sort_and_check_ids(trace, source_name);
  return trace;
}

std::vector<Request> load_trace(const std::string& path, TraceFormat format,
                                const AzureConvertOptions& azure_options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  switch (format) {
    case TraceFormat::Native:
      return parse_native_trace(in, path);
    case TraceFormat::AzureCsv:
      return parse_azure_csv(in, path, azure_options);
  }
  throw std::invalid_argument("unknown trace format");
}

void save_trace(const std::vector<Request>& trace, std::ostream& out) {
  for (const Request& r : trace) {
    nlohmann::ordered_json rec;
    rec["id"] = r.id;
    rec["arrival_step"] = r.arrival_step;
    rec["prompt_tokens"] = r.prefill_len;
    rec["output_tokens"] = r.output_len;
    if (r.prompt_key) rec["prompt_key"] = *r.prompt_key;
    out << rec.dump() << '\n';
  }
}

void save_trace(const std::vector<Request>& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  save_trace(trace, out);
  out.flush();
  if (!out) throw std::runtime_error("failed writing trace file: " + path);
}

}  // namespace brsim
