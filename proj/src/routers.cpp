#include "brsim/routers.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

#include "brsim/projection.hpp"
#include "brsim/rng.hpp"
#include "brsim/subset_select.hpp"

namespace brsim {

namespace {

struct FleetView {
  std::vector<Tokens> loads;  // running, admissions included
  std::vector<int> caps;      // remaining free slots
  int free_total = 0;

  Tokens max_load() const {
    Tokens m = 0;
    for (Tokens l : loads) m = std::max(m, l);
    return m;
  }
};

FleetView make_view(const ClusterState& state) {
  FleetView v;
  v.loads.reserve(state.workers.size());
  v.caps.reserve(state.workers.size());
  for (const WorkerState& w : state.workers) {
    if (w.free_slots() < 0) throw std::invalid_argument("route: worker over capacity");
    v.loads.push_back(instantaneous_load(w, state.step));
    v.caps.push_back(w.free_slots());
    v.free_total += w.free_slots();
  }
  return v;
}

void admit(Dispatch& d, FleetView& v, int g, const Request& r) {
  d.admissions[static_cast<std::size_t>(g)].push_back(r.id);
  v.loads[static_cast<std::size_t>(g)] += r.prefill_len;
  v.caps[static_cast<std::size_t>(g)] -= 1;
  v.free_total -= 1;
}

Dispatch empty_dispatch(const ClusterState& state) {
  Dispatch d;
  d.admissions.resize(state.workers.size());
  return d;
}

}  // namespace

Dispatch route_random(const ClusterState& state, std::mt19937_64& rng) {
  Dispatch d = empty_dispatch(state);
  FleetView v = make_view(state);
  const int G = static_cast<int>(state.workers.size());
  for (const Request& r : state.waiting) {
    if (v.free_total == 0) break;
    int eligible = 0;
    for (int g = 0; g < G; ++g) eligible += v.caps[static_cast<std::size_t>(g)] > 0 ? 1 : 0;
    int pick = static_cast<int>(uniform_int(rng, 0, eligible - 1));
    for (int g = 0; g < G; ++g) {
      if (v.caps[static_cast<std::size_t>(g)] == 0) continue;
      if (pick == 0) {
        admit(d, v, g, r);
        break;
      }
      --pick;
    }
  }
  return d;
}

Dispatch route_round_robin(const ClusterState& state, int& cursor) {
  Dispatch d = empty_dispatch(state);
  FleetView v = make_view(state);
  const int G = static_cast<int>(state.workers.size());
  if (G == 0) return d;
  for (const Request& r : state.waiting) {
    if (v.free_total == 0) break;
    for (int probe = 0; probe < G; ++probe) {
      const int g = (cursor + probe) % G;
      if (v.caps[static_cast<std::size_t>(g)] > 0) {
        admit(d, v, g, r);
        cursor = (g + 1) % G;
        break;
      }
    }
  }
  return d;
}

Dispatch route_p2c(const ClusterState& state, std::mt19937_64& rng, bool compare_count) {
  const int G = static_cast<int>(state.workers.size());
  if (G < 2) throw std::invalid_argument("route_p2c: need at least two workers");
  Dispatch d = empty_dispatch(state);
  FleetView v = make_view(state);
  std::vector<int> counts(state.workers.size());
  for (int g = 0; g < G; ++g) {
    counts[static_cast<std::size_t>(g)] =
        static_cast<int>(state.workers[static_cast<std::size_t>(g)].active.size());
  }
  for (const Request& r : state.waiting) {
    if (v.free_total == 0) break;
    const int a = static_cast<int>(uniform_int(rng, 0, G - 1));
    int b = static_cast<int>(uniform_int(rng, 0, G - 2));
    if (b >= a) ++b;
    const bool a_free = v.caps[static_cast<std::size_t>(a)] > 0;
    const bool b_free = v.caps[static_cast<std::size_t>(b)] > 0;
    if (!a_free && !b_free) continue;  // both sampled workers full; request stays waiting
    int g;
    if (!a_free) {
      g = b;
    } else if (!b_free) {
      g = a;
    } else {
      const std::int64_t wa =
          compare_count ? counts[static_cast<std::size_t>(a)] : v.loads[static_cast<std::size_t>(a)];
      const std::int64_t wb =
          compare_count ? counts[static_cast<std::size_t>(b)] : v.loads[static_cast<std::size_t>(b)];
      g = wa < wb ? a : wb < wa ? b : std::min(a, b);
    }
    admit(d, v, g, r);
    counts[static_cast<std::size_t>(g)] += 1;
  }
  return d;
}

Dispatch route_jsq(const ClusterState& state) {
  Dispatch d = empty_dispatch(state);
  FleetView v = make_view(state);
  const int G = static_cast<int>(state.workers.size());
  std::vector<int> counts(state.workers.size());
  for (int g = 0; g < G; ++g) {
    counts[static_cast<std::size_t>(g)] =
        static_cast<int>(state.workers[static_cast<std::size_t>(g)].active.size());
  }
  for (const Request& r : state.waiting) {
    if (v.free_total == 0) break;
    int best = -1;
    for (int g = 0; g < G; ++g) {
      if (v.caps[static_cast<std::size_t>(g)] == 0) continue;
      if (best < 0 || counts[static_cast<std::size_t>(g)] < counts[static_cast<std::size_t>(best)]) best = g;
    }
    admit(d, v, best, r);
    counts[static_cast<std::size_t>(best)] += 1;
  }
  return d;
}

namespace {

// The instantaneous and horizon routers share one two-stage skeleton; only
// the margin structure behind the score differs. Keeping the stage order,
// tie rules, and starvation guard in one place is what makes the horizon-0
// configuration reduce to the instantaneous router decision for decision.
struct TwoStageHooks {
  std::function<double(const FleetView&, int g, Tokens delta)> score;
  std::function<Tokens(const FleetView&, int g)> queue_margin;
  std::function<void(int g, Tokens delta)> on_admit;  // extra bookkeeping per admission
  std::function<SubsetChoice(const FleetView&, int g, const CandidateWindow&)> best_subset;
};

struct WaitingPool {
  std::vector<const Request*> fifo;  // (arrival_step, id) order
  std::vector<bool> admitted;
  std::size_t remaining = 0;
};

WaitingPool make_pool(const ClusterState& state) {
  WaitingPool p;
  p.fifo.reserve(state.waiting.size());
  for (const Request& r : state.waiting) p.fifo.push_back(&r);
  std::stable_sort(p.fifo.begin(), p.fifo.end(), [](const Request* a, const Request* b) {
    if (a->arrival_step != b->arrival_step) return a->arrival_step < b->arrival_step;
    return a->id < b->id;
  });
  p.admitted.assign(p.fifo.size(), false);
  p.remaining = p.fifo.size();
  return p;
}

// Window of the largest-prefill waiting requests, FIFO among equals.
CandidateWindow make_window(const WaitingPool& pool, int r_max, int budget) {
  std::vector<std::size_t> head;
  head.reserve(pool.fifo.size());
  for (std::size_t i = 0; i < pool.fifo.size(); ++i) {
    if (!pool.admitted[i]) head.push_back(i);
  }
  const std::size_t take = std::min<std::size_t>(head.size(), static_cast<std::size_t>(r_max));
  std::partial_sort(head.begin(), head.begin() + static_cast<std::ptrdiff_t>(take), head.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (pool.fifo[a]->prefill_len != pool.fifo[b]->prefill_len) {
                        return pool.fifo[a]->prefill_len > pool.fifo[b]->prefill_len;
                      }
                      return a < b;
                    });
  CandidateWindow w;
  w.max_cardinality = budget;
  for (std::size_t i = 0; i < take; ++i) {
    w.items.push_back({pool.fifo[head[i]]->id, pool.fifo[head[i]]->prefill_len});
  }
  return w;
}

Dispatch two_stage_dispatch(const ClusterState& state, const RouterParams& params,
                            const TwoStageHooks& hooks) {
  Dispatch d = empty_dispatch(state);
  FleetView v = make_view(state);
  const int G = static_cast<int>(state.workers.size());
  if (G == 0 || v.free_total == 0 || state.waiting.empty()) return d;
  const int s_greedy = params.s_greedy >= 0 ? params.s_greedy : G;
  if (params.r_max < 1) throw std::invalid_argument("dispatch: r_max must be >= 1");

  WaitingPool pool = make_pool(state);
  std::vector<std::size_t> by_id(pool.fifo.size());
  for (std::size_t i = 0; i < by_id.size(); ++i) by_id[i] = i;
  std::sort(by_id.begin(), by_id.end(),
            [&](std::size_t a, std::size_t b) { return pool.fifo[a]->id < pool.fifo[b]->id; });
  auto pool_index_of = [&](RequestId id) {
    auto it = std::lower_bound(by_id.begin(), by_id.end(), id,
                               [&](std::size_t i, RequestId val) { return pool.fifo[i]->id < val; });
    return *it;
  };
  auto admit_one = [&](int g, std::size_t pool_idx) {
    const Request& r = *pool.fifo[pool_idx];
    admit(d, v, g, r);
    pool.admitted[pool_idx] = true;
    pool.remaining -= 1;
    hooks.on_admit(g, r.prefill_len);
  };

  // Stage 1: free capacity is abundant. Pick the worker with the most free
  // slots (ties: lighter instantaneous load, then lower index) and hand it
  // the single best-scoring waiting request, FIFO among ties.
  while (v.free_total > s_greedy && pool.remaining > 0) {
    int g = -1;
    for (int cand = 0; cand < G; ++cand) {
      const std::size_t c = static_cast<std::size_t>(cand);
      if (v.caps[c] == 0) continue;
      if (g < 0 || v.caps[c] > v.caps[static_cast<std::size_t>(g)] ||
          (v.caps[c] == v.caps[static_cast<std::size_t>(g)] &&
           v.loads[c] < v.loads[static_cast<std::size_t>(g)])) {
        g = cand;
      }
    }
    if (g < 0) break;
    std::size_t best_idx = 0;
    double best_score = 0.0;
    bool have = false;
    for (std::size_t i = 0; i < pool.fifo.size(); ++i) {
      if (pool.admitted[i]) continue;
      const double s = hooks.score(v, g, pool.fifo[i]->prefill_len);
      if (!have || s > best_score) {
        have = true;
        best_score = s;
        best_idx = i;
      }
    }
    admit_one(g, best_idx);
  }

  // Stage 2: scarce capacity. Pop the worker with the best (free slots,
  // margin) key, ties to the lower index, and admit the best-scoring
  // subset of the largest-prefill window. A non-positive best score still
  // admits the single best candidate so the pool cannot starve.
  while (pool.remaining > 0) {
    int g = -1;
    for (int cand = 0; cand < G; ++cand) {
      const std::size_t c = static_cast<std::size_t>(cand);
      if (v.caps[c] == 0) continue;
      if (g < 0 || v.caps[c] > v.caps[static_cast<std::size_t>(g)] ||
          (v.caps[c] == v.caps[static_cast<std::size_t>(g)] &&
           hooks.queue_margin(v, cand) > hooks.queue_margin(v, g))) {
        g = cand;
      }
    }
    if (g < 0) break;
    const int budget = std::min(v.caps[static_cast<std::size_t>(g)], params.r_max);
    const CandidateWindow window = make_window(pool, params.r_max, budget);
    SubsetChoice choice = hooks.best_subset(v, g, window);
    if (choice.score <= 0.0 || choice.ids.empty()) {
      const Candidate* pick = nullptr;
      double pick_score = 0.0;
      for (const Candidate& c : window.items) {
        const double s = hooks.score(v, g, c.prefill_len);
        const bool better =
            pick == nullptr || s > pick_score ||
            (s == pick_score && (c.prefill_len < pick->prefill_len ||
                                 (c.prefill_len == pick->prefill_len && c.id < pick->id)));
        if (better) {
          pick = &c;
          pick_score = s;
        }
      }
      choice = SubsetChoice{{pick->id}, pick->prefill_len, pick_score};
    }
    for (RequestId id : choice.ids) admit_one(g, pool_index_of(id));
  }
  return d;
}

}  // namespace

Dispatch br0_dispatch(const ClusterState& state, const RouterParams& params) {
  const int G = static_cast<int>(state.workers.size());
  TwoStageHooks hooks;
  hooks.score = [G](const FleetView& v, int g, Tokens delta) {
    return fscore_step(delta, v.max_load() - v.loads[static_cast<std::size_t>(g)], G);
  };
  hooks.queue_margin = [](const FleetView& v, int g) {
    return v.max_load() - v.loads[static_cast<std::size_t>(g)];
  };
  hooks.on_admit = [](int, Tokens) {};
  hooks.best_subset = [G](const FleetView& v, int g, const CandidateWindow& w) {
    return best_subset_two_probe(w, v.max_load() - v.loads[static_cast<std::size_t>(g)], G);
  };
  return two_stage_dispatch(state, params, hooks);
}

Dispatch brh_dispatch(const ClusterState& state, const RouterParams& params) {
  const Step H = params.score.horizon;
  if (H < 0) throw std::invalid_argument("brh_dispatch: horizon must be >= 0");
  {
    FleetView probe = make_view(state);
    if (probe.free_total == 0 || state.waiting.empty()) return empty_dispatch(state);
  }
  auto proj = std::make_shared<HorizonProjection>(project_fast(state.workers, H));
  auto discount = std::make_shared<DiscountVector>(discount_vector(H, params.score.gamma));
  const ScoreParams score = params.score;

  TwoStageHooks hooks;
  hooks.score = [proj, discount, score](const FleetView&, int g, Tokens delta) {
    return fscore_horizon(delta, proj->margins(g), *discount, score);
  };
  hooks.queue_margin = [proj](const FleetView&, int g) { return proj->min_margin(g); };
  hooks.on_admit = [proj](int g, Tokens delta) { proj->add_constant(g, delta); };
  const bool use_exhaustive = params.r_max <= 4;
  hooks.best_subset = [proj, discount, score, use_exhaustive](const FleetView&, int g,
                                                              const CandidateWindow& w) {
    const SubsetScorer scorer = [proj, discount, score, g](Tokens delta) {
      return fscore_horizon(delta, proj->margins(g), *discount, score);
    };
    return use_exhaustive ? best_subset_exhaustive(w, scorer) : best_subset_bitset(w, scorer);
  };
  return two_stage_dispatch(state, params, hooks);
}

Router::Router(const RouterParams& params, std::uint64_t fallback_seed) : params_(params) {
  const std::uint64_t seed =
      params.rng_seed ? *params.rng_seed
                      : mix_seed(fallback_seed, static_cast<std::uint64_t>(params.kind) + 17);
  rng_.seed(seed);
}

Dispatch Router::route(const ClusterState& state) {
  switch (params_.kind) {
    case RouterKind::Random:
      return route_random(state, rng_);
    case RouterKind::RoundRobin:
      return route_round_robin(state, cursor_);
    case RouterKind::P2C:
      return route_p2c(state, rng_, params_.p2c_compare_count);
    case RouterKind::Jsq:
      return route_jsq(state);
    case RouterKind::Br0:
      return br0_dispatch(state, params_);
    case RouterKind::Brh:
      return brh_dispatch(state, params_);
  }
  throw std::logic_error("Router: unknown kind");
}

const char* router_kind_name(RouterKind kind) {
  switch (kind) {
    case RouterKind::Random:
      return "random";
    case RouterKind::RoundRobin:
      return "rr";
    case RouterKind::P2C:
      return "p2c";
    case RouterKind::Jsq:
      return "jsq";
    case RouterKind::Br0:
      return "br0";
    case RouterKind::Brh:
      return "brh";
  }
  throw std::invalid_argument("unknown router kind");
}

RouterKind parse_router_kind(std::string_view name) {
  if (name == "random") return RouterKind::Random;
  if (name == "rr" || name == "round-robin" || name == "roundrobin") return RouterKind::RoundRobin;
  if (name == "p2c") return RouterKind::P2C;
  if (name == "jsq") return RouterKind::Jsq;
  if (name == "br0") return RouterKind::Br0;
  if (name == "brh") return RouterKind::Brh;
  throw std::invalid_argument("unknown router kind: " + std::string(name));
}

}  // namespace brsim
