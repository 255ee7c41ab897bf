#include "brsim/subset_select.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <stdexcept>

#include "brsim/scoring.hpp"

namespace brsim {

namespace {

constexpr int kMaxWindow = 24;  // enumeration guard; windows hold at most R_max items

std::vector<Candidate> sorted_by_id(const CandidateWindow& window) {
  std::vector<Candidate> items = window.items;
  std::sort(items.begin(), items.end(), [](const Candidate& a, const Candidate& b) { return a.id < b.id; });
  for (std::size_t i = 0; i + 1 < items.size(); ++i) {
    if (items[i].id == items[i + 1].id) throw std::invalid_argument("best_subset: duplicate candidate id");
  }
  for (const Candidate& c : items) {
    if (c.prefill_len < 1) throw std::invalid_argument("best_subset: prefill_len must be >= 1");
  }
  return items;
}

// Reachable sums per exact cardinality over item suffixes. row(t, j) holds
// sums formed from items t..n-1 using exactly j of them; row(0, j) is the
// usual dp[j]. The suffix snapshots allow greedy front-to-back recovery of
// the lexicographically smallest id subset for a target (cardinality, sum).
class SumTable {
 public:
  SumTable(const std::vector<Candidate>& items, int max_card)
      : n_(static_cast<int>(items.size())), max_card_(max_card) {
    total_ = 0;
    for (const Candidate& c : items) total_ += c.prefill_len;
    words_ = static_cast<std::size_t>(total_ / 64 + 1);
    rows_.assign(static_cast<std::size_t>(n_ + 1) * static_cast<std::size_t>(max_card_ + 1),
                 std::vector<std::uint64_t>(words_, 0));
    row(n_, 0)[0] = 1;  // empty suffix reaches sum 0 with zero items
    for (int t = n_ - 1; t >= 0; --t) {
      const Tokens s = items[static_cast<std::size_t>(t)].prefill_len;
      for (int j = 0; j <= max_card_; ++j) {
        row(t, j) = row(t + 1, j);
        if (j >= 1) or_shifted(row(t, j), row(t + 1, j - 1), s);
      }
    }
  }

  int size() const { return n_; }
  int max_card() const { return max_card_; }
  Tokens total() const { return total_; }

  bool test(int t, int j, Tokens b) const {
    const auto& r = row(t, j);
    return (r[static_cast<std::size_t>(b) / 64] >> (static_cast<std::size_t>(b) % 64)) & 1;
  }

  template <typename Fn>
  void for_each_sum(int j, Fn&& fn) const {
    const auto& r = row(0, j);
    for (std::size_t w = 0; w < words_; ++w) {
      std::uint64_t bits = r[w];
      while (bits != 0) {
        const int bit = std::countr_zero(bits);
        bits &= bits - 1;
        fn(static_cast<Tokens>(w * 64 + static_cast<std::size_t>(bit)));
      }
    }
  }

  // Largest reachable sum <= cap across all cardinalities; -1 if none.
  Tokens max_sum_at_most(Tokens cap) const {
    for (Tokens b = std::min(cap, total_); b >= 0; --b) {
      if (any_card_reaches(b)) return b;
    }
    return -1;
  }

  // Smallest reachable sum > floor; -1 if none.
  Tokens min_sum_above(Tokens floor) const {
    for (Tokens b = std::max<Tokens>(floor + 1, 0); b <= total_; ++b) {
      if (any_card_reaches(b)) return b;
    }
    return -1;
  }

  int min_card_reaching(Tokens b) const {
    for (int j = 0; j <= max_card_; ++j) {
      if (test(0, j, b)) return j;
    }
    return -1;
  }

  // Lexicographically smallest id subset with exactly card items summing to
  // sum: walk items in ascending id order, taking each whenever the
  // remaining suffix can still complete the target.
  std::vector<int> recover(const std::vector<Candidate>& items, int card, Tokens sum) const {
    std::vector<int> picked;
    picked.reserve(static_cast<std::size_t>(card));
    int j = card;
    Tokens b = sum;
    for (int t = 0; t < n_ && j > 0; ++t) {
      const Tokens s = items[static_cast<std::size_t>(t)].prefill_len;
      if (s <= b && test(t + 1, j - 1, b - s)) {
        picked.push_back(t);
        b -= s;
        j -= 1;
      }
    }
    if (j != 0 || b != 0) throw std::logic_error("best_subset: recovery failed");
    return picked;
  }

 private:
  bool any_card_reaches(Tokens b) const {
    for (int j = 0; j <= max_card_; ++j) {
      if (test(0, j, b)) return true;
    }
    return false;
  }

  std::vector<std::uint64_t>& row(int t, int j) {
    return rows_[static_cast<std::size_t>(t) * static_cast<std::size_t>(max_card_ + 1) +
                 static_cast<std::size_t>(j)];
  }
  const std::vector<std::uint64_t>& row(int t, int j) const {
    return rows_[static_cast<std::size_t>(t) * static_cast<std::size_t>(max_card_ + 1) +
                 static_cast<std::size_t>(j)];
  }

  void or_shifted(std::vector<std::uint64_t>& dst, const std::vector<std::uint64_t>& src, Tokens shift) {
    const std::size_t word_shift = static_cast<std::size_t>(shift) / 64;
    const int bit_shift = static_cast<int>(static_cast<std::size_t>(shift) % 64);
    for (std::size_t w = words_; w-- > word_shift;) {
      std::uint64_t v = src[w - word_shift] << bit_shift;
      if (bit_shift != 0 && w > word_shift) v |= src[w - word_shift - 1] >> (64 - bit_shift);
      dst[w] |= v;
    }
  }

  int n_;
  int max_card_;
  Tokens total_;
  std::size_t words_;
  std::vector<std::vector<std::uint64_t>> rows_;
};

void validate_window(const CandidateWindow& window) {
  if (window.max_cardinality < 0) throw std::invalid_argument("best_subset: negative cardinality budget");
  if (static_cast<int>(window.items.size()) > kMaxWindow) {
    throw std::invalid_argument("best_subset: window too large");
  }
}

SubsetChoice choice_from(const std::vector<Candidate>& items, const std::vector<int>& picked,
                         Tokens sum, double score) {
  SubsetChoice out;
  out.ids.reserve(picked.size());
  for (int t : picked) out.ids.push_back(items[static_cast<std::size_t>(t)].id);
  out.delta_s = sum;
  out.score = score;
  return out;
}

SubsetChoice bitset_best(const CandidateWindow& window, const SubsetScorer& scorer, Tokens sum_bound,
                         bool enforce_bound) {
  validate_window(window);
  const std::vector<Candidate> items = sorted_by_id(window);
  Tokens total = 0;
  for (const Candidate& c : items) total += c.prefill_len;
  if (enforce_bound && total > sum_bound) {
    throw std::invalid_argument("best_subset_bitset: window sum exceeds bound");
  }
  const int max_card = std::min<int>(window.max_cardinality, static_cast<int>(items.size()));
  SumTable table(items, max_card);

  bool have = false;
  double best_score = 0.0;
  int best_card = 0;
  Tokens best_sum = 0;
  for (int j = 0; j <= max_card; ++j) {
    table.for_each_sum(j, [&](Tokens b) {
      const double score = scorer(b);
      // j and b ascend during the scan, so any tie keeps the incumbent,
      // matching the (cardinality, sum) tie order.
      if (!have || score > best_score) {
        have = true;
        best_score = score;
        best_card = j;
        best_sum = b;
      }
    });
  }
  return choice_from(items, table.recover(items, best_card, best_sum), best_sum, best_score);
}

}  // namespace

SubsetChoice best_subset_exhaustive(const CandidateWindow& window, const SubsetScorer& scorer) {
  validate_window(window);
  const std::vector<Candidate> items = sorted_by_id(window);
  const int n = static_cast<int>(items.size());
  const int max_card = std::min<int>(window.max_cardinality, n);

  bool have = false;
  double best_score = 0.0;
  int best_card = 0;
  Tokens best_sum = 0;
  std::uint32_t best_mask = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const int card = std::popcount(mask);
    if (card > max_card) continue;
    Tokens sum = 0;
    for (int t = 0; t < n; ++t) {
      if (mask & (1u << t)) sum += items[static_cast<std::size_t>(t)].prefill_len;
    }
    const double score = scorer(sum);
    bool take = false;
    if (!have || score > best_score) {
      take = true;
    } else if (score == best_score) {
      if (card < best_card) {
        take = true;
      } else if (card == best_card && sum < best_sum) {
        take = true;
      } else if (card == best_card && sum == best_sum && mask != best_mask) {
        // Equal-length ascending id sequences: the subset containing the
        // lowest differing index is lexicographically smaller.
        const std::uint32_t diff = mask ^ best_mask;
        take = (mask & (diff & (~diff + 1))) != 0;
      }
    }
    if (take) {
      have = true;
      best_score = score;
      best_card = card;
      best_sum = sum;
      best_mask = mask;
    }
  }

  SubsetChoice out;
  for (int t = 0; t < n; ++t) {
    if (best_mask & (1u << t)) out.ids.push_back(items[static_cast<std::size_t>(t)].id);
  }
  out.delta_s = best_sum;
  out.score = best_score;
  return out;
}

SubsetChoice best_subset_bitset(const CandidateWindow& window, const SubsetScorer& scorer,
                                Tokens sum_bound) {
  return bitset_best(window, scorer, sum_bound, true);
}

SubsetChoice best_subset_two_probe(const CandidateWindow& window, Tokens margin, int num_workers) {
  validate_window(window);
  if (margin < 0) throw std::invalid_argument("best_subset_two_probe: margin must be >= 0");
  if (num_workers < 1) throw std::invalid_argument("best_subset_two_probe: num_workers must be >= 1");
  const SubsetScorer scorer = [margin, num_workers](Tokens delta) {
    return fscore_step(delta, margin, num_workers);
  };
  if (num_workers < 2) {
    // Degenerate single-worker scorer is flat past the kink; let the full
    // scan handle tie-breaks.
    return bitset_best(window, scorer, 0, false);
  }
  const std::vector<Candidate> items = sorted_by_id(window);
  const int max_card = std::min<int>(window.max_cardinality, static_cast<int>(items.size()));
  SumTable table(items, max_card);

  const Tokens lo = table.max_sum_at_most(margin);  // sum 0 is always reachable
  const Tokens hi = table.min_sum_above(margin);

  double best_score = scorer(lo);
  int best_card = table.min_card_reaching(lo);
  Tokens best_sum = lo;
  if (hi >= 0) {
    const double hi_score = scorer(hi);
    const int hi_card = table.min_card_reaching(hi);
    if (hi_score > best_score || (hi_score == best_score && hi_card < best_card)) {
      best_score = hi_score;
      best_card = hi_card;
      best_sum = hi;
    }
  }
  return choice_from(items, table.recover(items, best_card, best_sum), best_sum, best_score);
}

}  // namespace brsim
