#include <doctest.h>

#include <random>
#include <stdexcept>
#include <vector>

#include "brsim/rng.hpp"
#include "brsim/scoring.hpp"

using namespace brsim;

TEST_CASE("discount vector is built by iterated multiplication") {
  const DiscountVector d = discount_vector(3, 0.9);
  REQUIRE(d.entries.size() == 4);
  CHECK(d.entries[0] == 1.0);
  CHECK(d.entries[1] == 0.9);
  CHECK(d.entries[2] == 0.9 * 0.9);
  CHECK(d.entries[3] == 0.9 * (0.9 * 0.9));
  CHECK(d.total == d.entries[0] + d.entries[1] + d.entries[2] + d.entries[3]);
  CHECK(d.horizon() == 3);

  const DiscountVector flat = discount_vector(5, 1.0);
  for (double e : flat.entries) CHECK(e == 1.0);
  CHECK(flat.total == 6.0);

  CHECK(discount_vector(0, 0.5).entries.size() == 1);
  CHECK_THROWS_AS(discount_vector(-1, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(discount_vector(2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(discount_vector(2, 1.5), std::invalid_argument);
}

TEST_CASE("safe margin") {
  CHECK(safe_margin_step(3, 10) == 7);
  CHECK(safe_margin_step(10, 10) == 0);
  CHECK_THROWS_AS(safe_margin_step(11, 10), std::invalid_argument);
}

TEST_CASE("instantaneous admission score") {
  CHECK(fscore_step(3, 5, 8) == 3.0);
  CHECK(fscore_step(5, 3, 8) == 5.0 - 8.0 * 2.0);
  CHECK(fscore_step(0, 0, 8) == 0.0);
  CHECK(fscore_step(4, 4, 8) == 4.0);
  CHECK_THROWS_AS(fscore_step(-1, 3, 8), std::invalid_argument);
  CHECK_THROWS_AS(fscore_step(3, -1, 8), std::invalid_argument);
  CHECK_THROWS_AS(fscore_step(3, 3, 0), std::invalid_argument);
}

TEST_CASE("instantaneous score slopes and kink") {
  const int G = 6;
  const Tokens m = 9;
  for (Tokens delta = 0; delta < m; ++delta) {
    CHECK(fscore_step(delta + 1, m, G) - fscore_step(delta, m, G) == 1.0);
  }
  for (Tokens delta = m; delta < m + 10; ++delta) {
    CHECK(fscore_step(delta + 1, m, G) - fscore_step(delta, m, G) == -(double(G) - 1.0));
  }
  CHECK(fscore_step(m, m, G) == double(m));  // the kink itself is penalty-free
}

TEST_CASE("horizon score with unit horizon weights") {
  // H=2, gamma=1: d = {1,1,1}, total 3. margins {5,3,1}, delta 4, alpha 1,
  // beta 2: gain 12, penalty 0 + 1 + 3 = 4, score 12 - 8 = 4.
  ScoreParams params;
  params.alpha = 1.0;
  params.beta = 2.0;
  params.gamma = 1.0;
  params.horizon = 2;
  const DiscountVector d = discount_vector(2, 1.0);
  const MarginVector margins = {5, 3, 1};
  CHECK(fscore_horizon(4, margins, d, params) == 4.0);

  const MarginVector wrong_len = {5, 3};
  CHECK_THROWS_AS(fscore_horizon(4, wrong_len, d, params), std::invalid_argument);
  const MarginVector negative = {5, -1, 1};
  CHECK_THROWS_AS(fscore_horizon(4, negative, d, params), std::invalid_argument);
  CHECK_THROWS_AS(fscore_horizon(-2, margins, d, params), std::invalid_argument);
}

TEST_CASE("zero-horizon score equals the instantaneous score bit for bit") {
  const DiscountVector d0 = discount_vector(0, 0.9);
  for (int G : {1, 2, 4, 8, 48}) {
    ScoreParams params;
    params.alpha = 1.0;
    params.beta = double(G);
    params.horizon = 0;
    for (Tokens delta = 0; delta <= 25; ++delta) {
      for (Tokens m = 0; m <= 25; ++m) {
        const MarginVector margins = {m};
        CHECK(fscore_horizon(delta, margins, d0, params) == fscore_step(delta, m, G));
      }
    }
  }
}

TEST_CASE("horizon score is linear below every margin and monotone in margins") {
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 200; ++iter) {
    const Step H = uniform_int(rng, 0, 12);
    const double gamma = 0.5 + 0.5 * uniform_real(rng);
    const DiscountVector d = discount_vector(H, gamma);
    ScoreParams params;
    params.alpha = 0.5 + uniform_real(rng);
    params.beta = 1.0 + 60.0 * uniform_real(rng);
    params.gamma = gamma;
    params.horizon = H;
    MarginVector margins;
    Tokens min_margin = 1 << 20;
    for (Step h = 0; h <= H; ++h) {
      margins.push_back(uniform_int(rng, 0, 40));
      min_margin = std::min(min_margin, margins.back());
    }
    // Below the smallest margin no penalty term is active.
    for (Tokens delta = 0; delta <= min_margin; ++delta) {
      CHECK(fscore_horizon(delta, margins, d, params) ==
            doctest::Approx(params.alpha * d.total * double(delta)).epsilon(1e-12));
    }
    // Raising one margin never lowers the score.
    const Tokens delta = uniform_int(rng, 0, 60);
    MarginVector raised = margins;
    raised[static_cast<std::size_t>(uniform_int(rng, 0, H))] += 5;
    CHECK(fscore_horizon(delta, raised, d, params) >= fscore_horizon(delta, margins, d, params));
  }
}
