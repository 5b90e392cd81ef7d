#include "lceme/sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lceme/errors.hpp"

namespace lceme {

namespace {

void check_strategy(const ClientStrategy& st, const Dataset& ds, int client = -1) {
  const std::string who = client < 0 ? "strategy" : "client " + std::to_string(client);
  if (st.effort != 0 && st.effort != 1)
    throw NumericError(who + ": effort must be 0 or 1");
  if (st.batch < 1 || static_cast<std::size_t>(st.batch) > ds.size()) {
    throw DimensionError(who + ": batch " + std::to_string(st.batch) +
                         " outside [1, " + std::to_string(ds.size()) + "]");
  }
  if (!(st.gamma >= 0.0) || !std::isfinite(st.gamma))
    throw NumericError(who + ": gamma must be finite and >= 0");
}

std::vector<double> roster_weights(std::span<const ClientProfile> profiles) {
  std::vector<double> p;
  p.reserve(profiles.size());
  for (const ClientProfile& c : profiles) p.push_back(c.weight);
  return p;
}

}  // namespace

Vec local_update(const LossModel& model, const Vec& w_global,
                 const ClientProfile& profile, const ClientStrategy& strategy,
                 const TrainConfig& cfg, RngStream& rng) {
  check_strategy(strategy, profile.dataset);
  const std::uint64_t n = profile.dataset.size();
  Vec w = w_global;
  Vec grad(w.size());
  for (int h = 0; h < cfg.local_iters; ++h) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int j = 0; j < strategy.batch; ++j) {
      const LabeledSample& s = profile.dataset.sample(rng.next_below(n));
      const Vec gs = per_sample_grad(model, w, s);
      axpy(1.0, gs, grad);
    }
    axpy(-cfg.eta / strategy.batch, grad, w);
  }
  // Reported model: gamma scales the whole local displacement.
  Vec reported = w_global;
  for (std::size_t i = 0; i < w.size(); ++i)
    reported[i] += strategy.gamma * (w[i] - w_global[i]);
  return reported;
}

Vec aggregate(std::span<const Vec> models, std::span<const double> weights) {
  if (models.empty()) throw DimensionError("aggregate: no models");
  if (models.size() != weights.size())
    throw DimensionError("aggregate: " + std::to_string(models.size()) +
                         " models but " + std::to_string(weights.size()) + " weights");
  double sum = 0.0;
  for (double p : weights) {
    if (!(p >= 0.0)) throw NumericError("aggregate: negative weight");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw NumericError("aggregate: weights sum to " + std::to_string(sum) +
                       ", expected 1 within 1e-12");
  const std::size_t dim = models.front().size();
  Vec out(dim, 0.0);
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (models[i].size() != dim)
      throw DimensionError("aggregate: model " + std::to_string(i) + " has dim " +
                           std::to_string(models[i].size()) + ", expected " +
                           std::to_string(dim));
    axpy(weights[i], models[i], out);
  }
  return out;
}

TrainResult run_training(const LossModel& model, const TrainConfig& cfg,
                         std::span<const ClientProfile> profiles,
                         std::span<const ClientStrategy> strategies,
                         std::span<const Dataset> eval_datasets,
                         std::optional<double> optimal_loss) {
  if (profiles.empty()) throw DimensionError("run_training: empty roster");
  if (profiles.size() != strategies.size() || profiles.size() != eval_datasets.size())
    throw DimensionError("run_training: roster sizes disagree");
  if (!(cfg.eta > 0.0)) throw NumericError("run_training: eta must be > 0");
  if (cfg.rounds < 1 || cfg.local_iters < 1)
    throw NumericError("run_training: rounds and local_iters must be >= 1");
  for (std::size_t i = 0; i < profiles.size(); ++i)
    check_strategy(strategies[i], profiles[i].dataset, static_cast<int>(i));

  const std::vector<double> p = roster_weights(profiles);
  const std::size_t dim = cfg.w0.size();
  if (dim != static_cast<std::size_t>(param_dim(model, profiles.front().dataset)))
    throw DimensionError("run_training: w0 has dim " + std::to_string(dim) +
                         ", expected " +
                         std::to_string(param_dim(model, profiles.front().dataset)));

  TrainResult result;
  result.loss_per_round.reserve(static_cast<std::size_t>(cfg.rounds));
  Vec w = cfg.w0;
  std::vector<Vec> reported(profiles.size());
  for (int t = 1; t <= cfg.rounds; ++t) {
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      RngStream rng = RngStream::substream(
          cfg.seed, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(t)});
      reported[i] = local_update(model, w, profiles[i], strategies[i], cfg, rng);
    }
    w = aggregate(reported, p);
    result.loss_per_round.push_back(global_loss(model, w, eval_datasets, p));
    if (cfg.record_reported) {
      result.reported_trace.push_back(reported);
      result.global_trace.push_back(w);
    }
  }
  result.w_final = std::move(w);

  double f_star;
  if (optimal_loss.has_value()) {
    f_star = *optimal_loss;
  } else {
    const Vec w_star = minimize(model, eval_datasets, p);
    f_star = global_loss(model, w_star, eval_datasets, p);
  }
  result.excess_loss = result.loss_per_round.back() - f_star;
  return result;
}

double test_loss(const LossModel& model, const Vec& w, const Dataset& test_set,
                 TestLossMode mode, RngStream* rng) {
  if (test_set.size() == 0) throw DimensionError("test_loss: empty test set");
  if (mode == TestLossMode::full_mean) return empirical_loss(model, w, test_set);
  if (rng == nullptr)
    throw NumericError("test_loss: single_sample mode needs an RNG stream");
  const LabeledSample& s = test_set.sample(rng->next_below(test_set.size()));
  return per_sample_loss(model, w, s);
}

double test_accuracy(const LossModel& model, const Vec& w, const Dataset& test_set) {
  if (!test_set.classification() || model.kind != ModelKind::multinomial_logistic)
    return std::nan("");
  const std::size_t d = static_cast<std::size_t>(test_set.feature_dim());
  const int k = test_set.num_classes();
  std::size_t hits = 0;
  for (std::size_t m = 0; m < test_set.size(); ++m) {
    const LabeledSample& s = test_set.sample(m);
    int best = 0;
    double best_score = dot(std::span<const double>(w).subspan(0, d), s.features);
    for (int c = 1; c < k; ++c) {
      const double score = dot(
          std::span<const double>(w).subspan(static_cast<std::size_t>(c) * d, d),
          s.features);
      if (score > best_score) {
        best_score = score;
        best = c;
      }
    }
    if (best == test_set.label_class(m)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test_set.size());
}

double estimate_sigma_sq(const LossModel& model, const Dataset& dataset,
                         std::span<const Vec> w_probes) {
  if (w_probes.empty())
    throw DimensionError("estimate_sigma_sq: probe list must not be empty");
  double worst = 0.0;
  for (const Vec& w : w_probes) {
    const Vec mean = empirical_grad(model, w, dataset);
    double var = 0.0;
    for (const LabeledSample& s : dataset.samples()) {
      const Vec g = per_sample_grad(model, w, s);
      var += dist_sq(g, mean);
    }
    worst = std::max(worst, var / static_cast<double>(dataset.size()));
  }
  return worst;
}

double estimate_g_sq(const LossModel& model, std::span<const Dataset> datasets,
                     std::span<const Vec> w_probes) {
  if (w_probes.empty())
    throw DimensionError("estimate_g_sq: probe list must not be empty");
  double worst = 0.0;
  for (const Dataset& ds : datasets)
    for (const Vec& w : w_probes)
      worst = std::max(worst, norm_sq(empirical_grad(model, w, ds)));
  return worst;
}

HeterogeneityReport estimate_heterogeneity(const LossModel& model,
                                           std::span<const Dataset> datasets,
                                           std::span<const double> weights) {
  HeterogeneityReport report;
  report.w_star = minimize(model, datasets, weights);
  report.f_star = global_loss(model, report.w_star, datasets, weights);
  report.het.reserve(datasets.size());
  for (const Dataset& ds : datasets) {
    const Vec w_i = minimize(model, ds);
    const double gap = empirical_loss(model, report.w_star, ds) -
                       empirical_loss(model, w_i, ds);
    if (gap < -1e-10) {
      throw NumericError("estimate_heterogeneity: negative gap " +
                         std::to_string(gap) + "; optimizer output is suspect");
    }
    report.het.push_back(std::max(0.0, gap));
  }
  return report;
}

}  // namespace lceme
