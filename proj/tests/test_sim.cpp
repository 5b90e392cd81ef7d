#include "doctest.h"

#include <cmath>
#include <numeric>

#include "lceme/errors.hpp"
#include "lceme/sim.hpp"

using namespace lceme;

namespace {

constexpr double kBigBound = 1e6;

Dataset regression_ds(std::vector<LabeledSample> samples) {
  return Dataset(std::move(samples), 0, kBigBound, kBigBound);
}

Dataset random_regression(int count, std::uint64_t seed, int dim = 1) {
  RngStream rng(seed);
  std::vector<LabeledSample> samples;
  for (int i = 0; i < count; ++i) {
    LabeledSample s;
    for (int j = 0; j < dim; ++j) s.features.push_back(rng.next_uniform(-1, 1));
    s.label = rng.next_uniform(-1, 1);
    samples.push_back(std::move(s));
  }
  return regression_ds(std::move(samples));
}

const LossModel kRidge{ModelKind::ridge_regression, 0.0};

}  // namespace

TEST_CASE("local update: gamma scales the reported displacement") {
  const Dataset ds = random_regression(20, 8);
  const ClientProfile profile{1.0, 1.0, ds, 0.0, 0.0};
  TrainConfig cfg;
  cfg.eta = 0.05;
  cfg.local_iters = 3;
  const Vec w0{0.7};

  RngStream r0(5);
  const Vec zero = local_update(kRidge, w0, profile, {1, 4, 0.0}, cfg, r0);
  CHECK(zero == w0);

  RngStream r1(5);
  RngStream r2(5);
  const Vec one = local_update(kRidge, w0, profile, {1, 4, 1.0}, cfg, r1);
  const Vec two = local_update(kRidge, w0, profile, {1, 4, 2.0}, cfg, r2);
  CHECK(two[0] - w0[0] == doctest::Approx(2.0 * (one[0] - w0[0])).epsilon(1e-15));
}

TEST_CASE("local update: one full-batch step on a single sample") {
  // x=1, y=1, w0=0, eta=0.1: gradient -1, so the local model moves to 0.1.
  const Dataset ds = regression_ds({{{1.0}, 1.0}});
  const ClientProfile profile{1.0, 1.0, ds, 0.0, 0.0};
  TrainConfig cfg;
  cfg.eta = 0.1;
  cfg.local_iters = 1;
  RngStream rng(3);
  const Vec reported = local_update(kRidge, Vec{0.0}, profile, {1, 1, 1.0}, cfg, rng);
  CHECK(reported[0] == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("local update rejects an oversized batch") {
  const Dataset ds = random_regression(5, 8);
  const ClientProfile profile{1.0, 1.0, ds, 0.0, 0.0};
  TrainConfig cfg;
  cfg.eta = 0.1;
  cfg.local_iters = 1;
  RngStream rng(3);
  CHECK_THROWS_AS(local_update(kRidge, Vec{0.0}, profile, {1, 6, 1.0}, cfg, rng),
                  DimensionError);
}

TEST_CASE("aggregate: hand cases, oracle, and permutation invariance") {
  const std::vector<Vec> same{{1.0, 2.0}, {1.0, 2.0}};
  const std::vector<double> half{0.5, 0.5};
  CHECK((aggregate(same, half) == Vec{1.0, 2.0}));

  const std::vector<Vec> scalars{{0.0}, {2.0}};
  CHECK(aggregate(scalars, half)[0] == doctest::Approx(1.0).epsilon(1e-15));

  RngStream rng(21);
  std::vector<Vec> models;
  for (int i = 0; i < 3; ++i)
    models.push_back({rng.next_uniform(-1, 1), rng.next_uniform(-1, 1)});
  const std::vector<double> p{0.2, 0.3, 0.5};
  const Vec agg = aggregate(models, p);
  for (int j = 0; j < 2; ++j) {
    double oracle = 0.0;
    for (int i = 0; i < 3; ++i)
      oracle += p[static_cast<std::size_t>(i)] *
                models[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    CHECK(agg[static_cast<std::size_t>(j)] == doctest::Approx(oracle).epsilon(1e-12));
  }

  const std::vector<Vec> permuted{models[2], models[0], models[1]};
  const std::vector<double> pperm{p[2], p[0], p[1]};
  const Vec agg2 = aggregate(permuted, pperm);
  CHECK(std::sqrt(dist_sq(agg, agg2)) < 1e-15);

  CHECK_THROWS_AS(aggregate(models, half), DimensionError);
  const std::vector<double> badsum{0.2, 0.3, 0.4};
  CHECK_THROWS_AS(aggregate(models, badsum), NumericError);
}

TEST_CASE("run_training: single client, single round equals one local update") {
  const Dataset ds = random_regression(10, 14);
  const std::vector<ClientProfile> profiles{{1.0, 1.0, ds, 0.0, 0.0}};
  const std::vector<ClientStrategy> strategies{{1, 3, 1.0}};
  TrainConfig cfg;
  cfg.eta = 0.05;
  cfg.rounds = 1;
  cfg.local_iters = 2;
  cfg.seed = 77;
  cfg.w0 = {0.0};
  const std::vector<Dataset> eval{ds};
  const TrainResult res =
      run_training(kRidge, cfg, profiles, strategies, eval, 0.0);

  RngStream replica = RngStream::substream(77, {0, 1});
  const Vec direct = local_update(kRidge, cfg.w0, profiles[0], strategies[0], cfg, replica);
  CHECK(res.w_final == direct);
  CHECK(res.loss_per_round.size() == 1);
}

TEST_CASE("run_training: gamma 0 everywhere freezes the global model") {
  const Dataset a = random_regression(10, 1);
  const Dataset b = random_regression(10, 2);
  const std::vector<ClientProfile> profiles{{0.5, 1.0, a, 0.0, 0.0},
                                            {0.5, 1.0, b, 0.0, 0.0}};
  const std::vector<ClientStrategy> strategies{{1, 2, 0.0}, {1, 2, 0.0}};
  TrainConfig cfg;
  cfg.eta = 0.1;
  cfg.rounds = 4;
  cfg.local_iters = 1;
  cfg.seed = 5;
  cfg.w0 = {0.3};
  const std::vector<Dataset> eval{a, b};
  const TrainResult res = run_training(kRidge, cfg, profiles, strategies, eval, 0.0);
  CHECK(res.w_final == cfg.w0);
  for (double l : res.loss_per_round)
    CHECK(l == doctest::Approx(res.loss_per_round[0]).epsilon(1e-15));
}

TEST_CASE("run_training is bit-deterministic in the seed") {
  const Dataset a = random_regression(15, 31);
  const Dataset b = random_regression(12, 32);
  const std::vector<ClientProfile> profiles{{0.5, 1.0, a, 0.0, 0.0},
                                            {0.5, 1.0, b, 0.0, 0.0}};
  const std::vector<ClientStrategy> strategies{{1, 4, 1.0}, {1, 3, 1.3}};
  TrainConfig cfg;
  cfg.eta = 0.07;
  cfg.rounds = 3;
  cfg.local_iters = 2;
  cfg.seed = 123456;
  cfg.w0 = {0.0};
  const std::vector<Dataset> eval{a, b};
  const TrainResult r1 = run_training(kRidge, cfg, profiles, strategies, eval, 0.0);
  const TrainResult r2 = run_training(kRidge, cfg, profiles, strategies, eval, 0.0);
  CHECK(r1.w_final == r2.w_final);
  CHECK(r1.loss_per_round == r2.loss_per_round);
}

TEST_CASE("gamma=1 reports exactly the H-step local model") {
  const Dataset ds = random_regression(25, 41, 2);
  const ClientProfile profile{1.0, 1.0, ds, 0.0, 0.0};
  TrainConfig cfg;
  cfg.eta = 0.03;
  cfg.local_iters = 4;
  const Vec w0{0.2, -0.4};
  RngStream rng(71);
  const Vec reported = local_update(kRidge, w0, profile, {1, 5, 1.0}, cfg, rng);

  // Independent replay of the same SGD path.
  RngStream replay(71);
  Vec w = w0;
  for (int h = 0; h < 4; ++h) {
    Vec g(2, 0.0);
    for (int j = 0; j < 5; ++j) {
      const LabeledSample& s = ds.sample(replay.next_below(ds.size()));
      const double r = dot(w, s.features) - s.label;
      axpy(r, s.features, g);
    }
    axpy(-cfg.eta / 5.0, g, w);
  }
  CHECK(reported == w);
}

TEST_CASE("mean excess loss is non-increasing in the round count") {
  const LossModel reg{ModelKind::ridge_regression, 0.1};
  const Dataset a = random_regression(30, 51, 2);
  const Dataset b = random_regression(30, 52, 2);
  const std::vector<Dataset> eval{a, b};
  const std::vector<double> p{0.5, 0.5};
  const Vec w_star = minimize(reg, eval, p);
  const double f_star = global_loss(reg, w_star, eval, p);
  const auto consts = estimate_constants(reg, eval);

  const std::vector<ClientProfile> profiles{{0.5, 1.0, a, 0.0, 0.0},
                                            {0.5, 1.0, b, 0.0, 0.0}};
  const std::vector<ClientStrategy> strategies{{1, 10, 1.0}, {1, 10, 1.0}};
  std::vector<double> means;
  for (int rounds : {10, 50, 200}) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      TrainConfig cfg;
      cfg.eta = 0.02 / consts.smooth;
      cfg.rounds = rounds;
      cfg.local_iters = 1;
      cfg.seed = seed;
      // start far from the optimum so contraction, not the SGD noise floor,
      // separates the three horizons
      cfg.w0 = {20.0, 20.0};
      total += run_training(reg, cfg, profiles, strategies, eval, f_star).excess_loss;
    }
    means.push_back(total / 20.0);
  }
  CHECK(means[1] <= means[0]);
  CHECK(means[2] <= means[1]);
}

TEST_CASE("test loss modes agree where they must") {
  const Dataset single = random_regression(1, 61);
  const Vec w{0.1};
  RngStream rng(1);
  CHECK(test_loss(kRidge, w, single, TestLossMode::single_sample, &rng) ==
        test_loss(kRidge, w, single, TestLossMode::full_mean));

  const Dataset ds = random_regression(50, 62);
  CHECK(test_loss(kRidge, w, ds, TestLossMode::full_mean) ==
        doctest::Approx(empirical_loss(kRidge, w, ds)).epsilon(1e-15));

  // Monte-Carlo mean of single draws vs the full mean, 3 standard errors.
  RngStream mc(7);
  const int n = 10000;
  std::vector<double> draws;
  draws.reserve(n);
  for (int i = 0; i < n; ++i)
    draws.push_back(test_loss(kRidge, w, ds, TestLossMode::single_sample, &mc));
  const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / n;
  double var = 0.0;
  for (double d : draws) var += (d - mean) * (d - mean);
  var /= (n - 1);
  const double se = std::sqrt(var / n);
  const double full = test_loss(kRidge, w, ds, TestLossMode::full_mean);
  CHECK(std::abs(mean - full) <= 3.0 * se + 1e-12);
}

TEST_CASE("test loss rejects an empty test set") {
  const Dataset empty;
  RngStream rng(1);
  CHECK_THROWS_WITH_AS(
      test_loss(kRidge, Vec{0.0}, empty, TestLossMode::single_sample, &rng),
      doctest::Contains("empty"), DimensionError);
}

TEST_CASE("sigma estimation: hand cases") {
  const Dataset identical = regression_ds({{{1.0}, 0.5}, {{1.0}, 0.5}, {{1.0}, 0.5}});
  const std::vector<Vec> probes{{0.0}, {1.0}};
  CHECK(estimate_sigma_sq(kRidge, identical, probes) == 0.0);

  // Gradients at w=0 for (x=1,y=1) and (x=1,y=-1) are -1 and +1: variance 1.
  const Dataset pm = regression_ds({{{1.0}, 1.0}, {{1.0}, -1.0}});
  const std::vector<Vec> zero{{0.0}};
  CHECK(estimate_sigma_sq(kRidge, pm, zero) == doctest::Approx(1.0).epsilon(1e-14));

  const Dataset doubled =
      regression_ds({{{1.0}, 1.0}, {{1.0}, -1.0}, {{1.0}, 1.0}, {{1.0}, -1.0}});
  CHECK(estimate_sigma_sq(kRidge, doubled, zero) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(estimate_sigma_sq(kRidge, pm, std::vector<Vec>{}), DimensionError);
}

TEST_CASE("gradient-norm bound estimation") {
  const LossModel reg{ModelKind::ridge_regression, 0.05};
  const Dataset ds = random_regression(20, 71, 2);
  const std::vector<Dataset> roster{ds};
  const std::vector<double> p{1.0};
  const Vec w_star = minimize(reg, ds);
  CHECK(estimate_g_sq(reg, roster, std::vector<Vec>{w_star}) <= 1e-12);

  const Vec probe{0.4, -0.2};
  const double direct = norm_sq(empirical_grad(reg, probe, ds));
  CHECK(estimate_g_sq(reg, roster, std::vector<Vec>{probe}) ==
        doctest::Approx(direct).epsilon(1e-14));

  const double small = estimate_g_sq(reg, roster, std::vector<Vec>{probe});
  const double grown =
      estimate_g_sq(reg, roster, std::vector<Vec>{probe, {2.0, 2.0}});
  CHECK(grown >= small);
}

TEST_CASE("heterogeneity degrees") {
  const LossModel reg{ModelKind::ridge_regression, 0.05};
  const Dataset shared = random_regression(20, 81, 2);
  const std::vector<Dataset> same{shared, shared, shared};
  const std::vector<double> p{0.3, 0.3, 0.4};
  const HeterogeneityReport same_rep = estimate_heterogeneity(reg, same, p);
  for (double d : same_rep.het) CHECK(d == doctest::Approx(0.0).epsilon(1e-12));

  // Two scalar clients, x=1, labels 0 and 2, no regularizer:
  // w* = 1, each client optimum fits its own label, so d_i = 0.5 each.
  const Dataset zero = regression_ds({{{1.0}, 0.0}});
  const Dataset two = regression_ds({{{1.0}, 2.0}});
  const std::vector<Dataset> pair{zero, two};
  const std::vector<double> half{0.5, 0.5};
  const HeterogeneityReport rep = estimate_heterogeneity(kRidge, pair, half);
  CHECK(rep.w_star[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.het[0] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(rep.het[1] == doctest::Approx(0.5).epsilon(1e-10));
  for (double d : rep.het) CHECK(d >= 0.0);
}
