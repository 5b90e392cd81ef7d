#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lceme/data.hpp"
#include "lceme/model.hpp"
#include "lceme/rng.hpp"

namespace lceme {

// The strategic triple a client actually executes: labeling effort e,
// mini-batch size D per local SGD iteration, and the reporting coefficient
// gamma scaling the local displacement she sends back.
struct ClientStrategy {
  int effort = 1;      // e in {0, 1}
  int batch = 1;       // D >= 1, <= |local dataset|
  double gamma = 1.0;  // >= 0; 1 reports the true local model
};

// Per-client constants. `dataset` is what the client trains on, i.e. the
// post-labeling data; the engine evaluates losses on separately supplied
// clean datasets. sigma_sq and het must be filled (estimate_sigma_sq /
// estimate_heterogeneity) before bound or mechanism use.
struct ClientProfile {
  double weight = 0.0;     // p_i, sums to 1 over a roster
  double comp_cost = 0.0;  // c_p: cost per sample per round
  Dataset dataset;
  double sigma_sq = 0.0;   // per-sample gradient variance bound
  double het = 0.0;        // d_i = F_i(w*) - F_i(w_i*)
};

struct TrainConfig {
  double eta = 0.0;        // step size
  int rounds = 1;          // T
  int local_iters = 1;     // H
  std::uint64_t seed = 0;
  Vec w0;
  bool record_reported = false;  // keep per-round reported models
};

struct TrainResult {
  Vec w_final;
  std::vector<double> loss_per_round;  // F(w_t) on the clean datasets, t = 1..T
  double excess_loss = 0.0;            // F(w_T) - F(w*)
  // Only when record_reported is set: reported_trace[t][i] is client i's
  // reported model in round t+1, global_trace[t] the aggregated w_{t+1}.
  std::vector<std::vector<Vec>> reported_trace;
  std::vector<Vec> global_trace;
};

// One client's round: H local SGD iterations from w_global with uniform
// with-replacement mini-batches of `strategy.batch` samples, then gamma
// scaling of the total displacement. Returns the reported model
// w_global + gamma * (w_local - w_global); with H = 1 this is exactly a
// single gamma-scaled gradient step.
Vec local_update(const LossModel& model, const Vec& w_global,
                 const ClientProfile& profile, const ClientStrategy& strategy,
                 const TrainConfig& cfg, RngStream& rng);

// w = sum_i p_i m_i. Dimensions must agree and weights sum to 1 within 1e-12.
Vec aggregate(std::span<const Vec> models, std::span<const double> weights);

// Runs T rounds of broadcast -> local updates -> weighted aggregation.
// loss_per_round is measured on eval_datasets (the uncorrupted, true-task
// data) regardless of what the clients trained on. Deterministic in
// cfg.seed: each (client, round) gets its own derived RNG stream.
// optimal_loss, when given, is F(w*) for the excess; otherwise it is
// computed by minimizing the evaluation objective.
TrainResult run_training(const LossModel& model, const TrainConfig& cfg,
                         std::span<const ClientProfile> profiles,
                         std::span<const ClientStrategy> strategies,
                         std::span<const Dataset> eval_datasets,
                         std::optional<double> optimal_loss = std::nullopt);

enum class TestLossMode {
  single_sample,  // f(w, xi) for one seeded draw from the test set
  full_mean,      // average over the whole test set
};

double test_loss(const LossModel& model, const Vec& w, const Dataset& test_set,
                 TestLossMode mode, RngStream* rng = nullptr);

// Top-1 accuracy on a classification test set (ties go to the lowest class).
double test_accuracy(const LossModel& model, const Vec& w, const Dataset& test_set);

// sigma_i^2: max over probe points of the per-sample gradient variance
// (1/n) sum_m ||grad f(w, xi_m) - grad F_i(w)||^2 on the client's clean data.
double estimate_sigma_sq(const LossModel& model, const Dataset& dataset,
                         std::span<const Vec> w_probes);

// G^2: max over clients and probe points of ||grad F_i(w)||^2.
double estimate_g_sq(const LossModel& model, std::span<const Dataset> datasets,
                     std::span<const Vec> w_probes);

struct HeterogeneityReport {
  Vec w_star;               // global optimum
  double f_star = 0.0;      // F(w*)
  std::vector<double> het;  // d_i >= 0 per client
};

// d_i = F_i(w*) - F_i(w_i*), clamped to >= 0. Uses minimize() for both the
// weighted global optimum and each client optimum; datasets must be the
// clean ones.
HeterogeneityReport estimate_heterogeneity(const LossModel& model,
                                           std::span<const Dataset> datasets,
                                           std::span<const double> weights);

}  // namespace lceme
