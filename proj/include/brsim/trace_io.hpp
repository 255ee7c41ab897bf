#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "brsim/core.hpp"

namespace brsim {

enum class TraceFormat {
  Native,    // one JSON object per line: id, arrival_step, prompt_tokens, output_tokens, prompt_key?
  AzureCsv,  // CSV with TIMESTAMP, ContextTokens, GeneratedTokens columns
};

struct AzureConvertOptions {
  // Wall-clock milliseconds folded into one simulation step.
  std::int64_t ms_per_step = 60;
  // Drop rows whose generated-token count is <= this bound; <= 0 disables.
  Tokens min_output_exclusive = 0;
};

// Parse one trace from an already-open stream. `source_name` seeds error
// messages ("file:line: ..."). Both parsers validate token counts and id
// uniqueness and return the requests sorted by (arrival_step, id).
std::vector<Request> parse_native_trace(std::istream& in, const std::string& source_name);
std::vector<Request> parse_azure_csv(std::istream& in, const std::string& source_name,
                                     const AzureConvertOptions& options);

std::vector<Request> load_trace(const std::string& path, TraceFormat format,
                                const AzureConvertOptions& azure_options = {});

// Write the native line-delimited format; load_trace(save_trace(t)) == t.
void save_trace(const std::vector<Request>& trace, std::ostream& out);
void save_trace(const std::vector<Request>& trace, const std::string& path);

}  // namespace brsim
