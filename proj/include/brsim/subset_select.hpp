#pragma once

#include <functional>
#include <vector>

#include "brsim/core.hpp"

namespace brsim {

struct Candidate {
  RequestId id = 0;
  Tokens prefill_len = 1;
};

// Stage-2 decision input: up to R_max waiting requests plus the admission
// budget for the popped worker.
struct CandidateWindow {
  std::vector<Candidate> items;
  int max_cardinality = 0;
};

// Winner of a window evaluation. ids are sorted ascending. Ties resolve to
// the smaller cardinality, then the smaller delta_s, then the
// lexicographically smallest id set; the empty subset is always a candidate.
struct SubsetChoice {
  std::vector<RequestId> ids;
  Tokens delta_s = 0;
  double score = 0.0;
};

// Scores depend on the chosen subset only through its prefill sum.
using SubsetScorer = std::function<double(Tokens)>;

inline constexpr Tokens kDefaultSumBound = Tokens{1} << 20;

// Reference: enumerate every subset within the cardinality budget.
SubsetChoice best_subset_exhaustive(const CandidateWindow& window, const SubsetScorer& scorer);

// Per-cardinality reachable-sum bitmasks (dp[j] |= dp[j-1] << s_i), scoring
// every reachable sum, with subset recovery from per-item DP snapshots.
// Rejects windows whose total prefill sum exceeds sum_bound.
SubsetChoice best_subset_bitset(const CandidateWindow& window, const SubsetScorer& scorer,
                                Tokens sum_bound = kDefaultSumBound);

// Instantaneous-scorer shortcut: the score rises with slope 1 up to the
// margin and falls with slope num_workers - 1 past it, so only the largest
// reachable sum at or below the margin and the smallest one above it can
// win. Exact for num_workers >= 2; delegates to the bitset path otherwise.
SubsetChoice best_subset_two_probe(const CandidateWindow& window, Tokens margin, int num_workers);

}  // namespace brsim
