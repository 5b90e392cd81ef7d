#include "doctest.h"

#include <cmath>

#include "lceme/bound.hpp"
#include "lceme/errors.hpp"
#include "lceme/rng.hpp"

using namespace lceme;

namespace {

BoundInputs unit_inputs() {
  BoundInputs b;
  b.smooth = 1.0;
  b.strong = 1.0;
  b.eta = 0.1;
  b.rounds = 1;
  b.local_iters = 1;
  b.beta = 0.0;
  b.grad_bound_sq = 0.0;
  b.init_dist_sq = 1.0;
  b.weight = {1.0};
  b.sigma_sq = {1.0};
  b.het = {0.0};
  return b;
}

BoundInputs random_inputs(RngStream& rng, int clients) {
  BoundInputs b;
  b.strong = rng.next_uniform(0.1, 1.0);
  b.smooth = b.strong * rng.next_uniform(1.0, 5.0);
  b.eta = rng.next_uniform(0.2, 1.0) * 0.5 / b.smooth;
  b.rounds = 1 + static_cast<int>(rng.next_below(20));
  b.local_iters = 1 + static_cast<int>(rng.next_below(3));
  b.beta = rng.next_uniform(0.0, 3.0);
  b.grad_bound_sq = rng.next_uniform(0.0, 2.0);
  b.init_dist_sq = rng.next_uniform(0.0, 4.0);
  double sum = 0.0;
  for (int i = 0; i < clients; ++i) {
    b.weight.push_back(rng.next_uniform(0.1, 1.0));
    sum += b.weight.back();
    b.sigma_sq.push_back(rng.next_uniform(0.01, 2.0));
    b.het.push_back(rng.next_uniform(0.0, 1.0));
  }
  for (double& p : b.weight) p /= sum;
  double fix = 0.0;
  for (double p : b.weight) fix += p;
  b.weight.back() += 1.0 - fix;
  return b;
}

std::vector<ClientStrategy> random_strategies(RngStream& rng, int clients) {
  std::vector<ClientStrategy> s;
  for (int i = 0; i < clients; ++i) {
    s.push_back({rng.next_double() < 0.5 ? 0 : 1,
                 1 + static_cast<int>(rng.next_below(40)),
                 rng.next_uniform(0.0, 2.0)});
  }
  return s;
}

}  // namespace

TEST_CASE("loss bound hand evaluations") {
  BoundInputs b = unit_inputs();
  const std::vector<ClientStrategy> truthful{{1, 1, 1.0}};
  // 0.9 * 1 + 2*1*0.01 * 1 * (sigma^2/D) = 0.92
  CHECK(loss_bound(b, truthful) == doctest::Approx(0.92).epsilon(1e-14));

  b.beta = 2.0;
  const std::vector<ClientStrategy> lazy{{0, 1, 1.0}};
  // extra term: A * p * beta = 0.02 * 2, and the (gamma-1)^2 + (H-1)^2
  // factor is zero so the trailing group stays out.
  CHECK(loss_bound(b, lazy) == doctest::Approx(0.96).epsilon(1e-14));
}

TEST_CASE("truthful single-iteration bound keeps only noise and drift terms") {
  RngStream rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    BoundInputs b = random_inputs(rng, 3);
    b.local_iters = 1;
    std::vector<ClientStrategy> s;
    for (int i = 0; i < 3; ++i)
      s.push_back({1, 1 + static_cast<int>(rng.next_below(20)), 1.0});
    const double a = geometric_series_constant(b.smooth, b.strong, b.eta,
                                               b.rounds, b.local_iters);
    double expected = b.smooth *
                      std::pow(1.0 - b.strong * b.eta, b.rounds) * b.init_dist_sq;
    for (int i = 0; i < 3; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      expected += a * (b.weight[iu] * b.weight[iu] * b.sigma_sq[iu] / s[iu].batch +
                       6.0 * b.smooth * b.weight[iu] * b.het[iu]);
    }
    CHECK(loss_bound(b, s) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("geometric series constant hand values and limit") {
  CHECK(geometric_series_constant(1.0, 1.0, 0.1, 1, 1) ==
        doctest::Approx(0.02).epsilon(1e-14));
  CHECK(geometric_series_constant(1.0, 1.0, 0.1, 2, 1) ==
        doctest::Approx(0.038).epsilon(1e-14));
  double prev = 0.0;
  for (int rounds : {1, 5, 20, 100, 1000}) {
    const double a = geometric_series_constant(2.0, 0.5, 0.2, rounds, 1);
    CHECK(a > prev);
    CHECK(a <= 2.0 * 2.0 * 0.2 / 0.5 + 1e-12);  // 2 L eta / mu
    prev = a;
  }
  CHECK_THROWS_AS(geometric_series_constant(1.0, 1.0, 1.0, 1, 1), NumericError);
}

TEST_CASE("closed form equals the term-by-term sum on 50 random inputs") {
  RngStream rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_below(4));
    const BoundInputs b = random_inputs(rng, n);
    const std::vector<ClientStrategy> s = random_strategies(rng, n);
    const double closed = loss_bound(b, s);
    const double termwise = loss_bound_term_sum(b, s);
    CHECK(closed == doctest::Approx(termwise).epsilon(1e-10));
  }
}

TEST_CASE("bound monotonicity in batch, effort, and gamma") {
  RngStream rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2;
    const BoundInputs b = random_inputs(rng, n);
    std::vector<ClientStrategy> s = random_strategies(rng, n);
    const double base = loss_bound(b, s);

    std::vector<ClientStrategy> bigger = s;
    bigger[0].batch += 1;
    CHECK(loss_bound(b, bigger) <= base + 1e-15);

    std::vector<ClientStrategy> lazy = s, diligent = s;
    lazy[1].effort = 0;
    diligent[1].effort = 1;
    CHECK(loss_bound(b, diligent) <= loss_bound(b, lazy) + 1e-15);

    // even symmetry about gamma = 1, minimized there
    std::vector<ClientStrategy> left = s, right = s, center = s;
    left[0].gamma = 0.4;
    right[0].gamma = 1.6;
    center[0].gamma = 1.0;
    CHECK(loss_bound(b, left) == doctest::Approx(loss_bound(b, right)).epsilon(1e-12));
    CHECK(loss_bound(b, center) <= loss_bound(b, left) + 1e-15);
  }
}

TEST_CASE("bound collapses to the contraction term when noise vanishes") {
  BoundInputs b = unit_inputs();
  b.sigma_sq = {0.0};
  b.beta = 0.0;
  b.grad_bound_sq = 0.0;
  b.het = {0.0};
  b.rounds = 7;
  const std::vector<ClientStrategy> truthful{{1, 3, 1.0}};
  const double expected = b.smooth * std::pow(1.0 - b.strong * b.eta, 7) * b.init_dist_sq;
  CHECK(loss_bound(b, truthful) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("violated hypotheses are named") {
  BoundInputs b = unit_inputs();
  b.eta = 0.9;  // 1/(2L) = 0.5
  const std::vector<ClientStrategy> s{{1, 1, 1.0}};
  CHECK_THROWS_WITH_AS(loss_bound(b, s), doctest::Contains("eta > 1/(2L)"),
                       NumericError);

  BoundInputs b2 = unit_inputs();
  b2.strong = 2.0;  // mu > L
  CHECK_THROWS_WITH_AS(loss_bound(b2, s), doctest::Contains("L < mu"), NumericError);

  BoundInputs b3 = unit_inputs();
  b3.weight = {0.6};
  CHECK_THROWS_AS(loss_bound(b3, s), NumericError);
}

TEST_CASE("sensitivity report signs follow the bound's monotonicity") {
  RngStream rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3;
    const BoundInputs b = random_inputs(rng, n);
    std::vector<ClientStrategy> s = random_strategies(rng, n);
    for (auto& st : s) st.gamma = rng.next_uniform(0.0, 2.0);

    for (double d : bound_sensitivity(b, s, StrategyComponent::batch))
      CHECK(d <= 1e-15);
    for (double d : bound_sensitivity(b, s, StrategyComponent::effort)) {
      CHECK(d <= 1e-15);
      if (b.beta > 0.0) CHECK(d < 0.0);
    }
    const std::vector<double> dg = bound_sensitivity(b, s, StrategyComponent::gamma);
    for (std::size_t i = 0; i < dg.size(); ++i) {
      CHECK(dg[i] >= -1e-15);
      if (s[i].gamma == 1.0) CHECK(dg[i] == 0.0);
    }

    // gamma deltas are even around 1: 1 -> 1+x and 1 -> 1-x match.
    std::vector<ClientStrategy> up = s, down = s;
    up[0].gamma = 1.5;
    down[0].gamma = 0.5;
    const double du = bound_sensitivity(b, up, StrategyComponent::gamma)[0];
    const double dd = bound_sensitivity(b, down, StrategyComponent::gamma)[0];
    CHECK(du == doctest::Approx(dd).epsilon(1e-12));
  }
}
