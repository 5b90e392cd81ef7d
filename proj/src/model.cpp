#include "lceme/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lceme/errors.hpp"

namespace lceme {

namespace {

void check_ridge_dims(std::span<const double> w, const LabeledSample& s) {
  if (w.size() != s.features.size()) {
    throw DimensionError("ridge: parameter dim " + std::to_string(w.size()) +
                         " does not match feature dim " +
                         std::to_string(s.features.size()));
  }
}

// Logistic parameters are K rows of length d; K is recovered from the sizes.
int logistic_classes(std::span<const double> w, const LabeledSample& s) {
  const std::size_t d = s.features.size();
  if (d == 0 || w.size() % d != 0) {
    throw DimensionError("logistic: parameter dim " + std::to_string(w.size()) +
                         " is not a multiple of feature dim " + std::to_string(d));
  }
  const int k = static_cast<int>(w.size() / d);
  const double label = s.label;
  if (!(label >= 0.0) || label != std::floor(label) || label >= k) {
    throw DimensionError("logistic: label " + std::to_string(label) +
                         " is not a class index below " + std::to_string(k));
  }
  return k;
}

// Softmax probabilities of the K class scores W x, numerically stabilized.
void class_probs(std::span<const double> w, std::span<const double> x, int k,
                 Vec& probs) {
  const std::size_t d = x.size();
  probs.resize(static_cast<std::size_t>(k));
  double zmax = -1e300;
  for (int c = 0; c < k; ++c) {
    const double z = dot(w.subspan(static_cast<std::size_t>(c) * d, d), x);
    probs[static_cast<std::size_t>(c)] = z;
    zmax = std::max(zmax, z);
  }
  double denom = 0.0;
  for (int c = 0; c < k; ++c) {
    probs[static_cast<std::size_t>(c)] = std::exp(probs[static_cast<std::size_t>(c)] - zmax);
    denom += probs[static_cast<std::size_t>(c)];
  }
  for (int c = 0; c < k; ++c) probs[static_cast<std::size_t>(c)] /= denom;
}

void check_weights(std::span<const Dataset> datasets, std::span<const double> weights) {
  if (datasets.empty()) throw DimensionError("global objective: no datasets");
  if (datasets.size() != weights.size()) {
    throw DimensionError("global objective: " + std::to_string(datasets.size()) +
                         " datasets but " + std::to_string(weights.size()) + " weights");
  }
  double sum = 0.0;
  for (double p : weights) {
    if (!(p >= 0.0)) throw NumericError("global objective: negative weight");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw NumericError("global objective: weights sum to " + std::to_string(sum) +
                       ", expected 1 within 1e-12");
  }
}

// Matrix-free v -> Gram v with Gram = (1/n) sum_m x_m x_m^T.
MatVec gram_operator(const Dataset& ds) {
  return [&ds](std::span<const double> v, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (const LabeledSample& s : ds.samples()) axpy(dot(s.features, v), s.features, out);
    const double inv = 1.0 / static_cast<double>(ds.size());
    for (double& o : out) o *= inv;
  };
}

constexpr int kGdMaxIters = 200000;
constexpr double kGdTarget = 1e-10;  // aimed for; 1e-9 is the contract
constexpr double kGdAccept = 1e-9;

Vec minimize_logistic(const LossModel& model, std::span<const Dataset> datasets,
                      std::span<const double> weights) {
  const int k = datasets.front().num_classes();
  const int d = datasets.front().feature_dim();
  for (const Dataset& ds : datasets) {
    if (ds.num_classes() != k || ds.feature_dim() != d)
      throw DimensionError("minimize: datasets disagree on classes/features");
  }
  // Descent is certified by the Armijo test while the predicted decrease is
  // resolvable in double precision; near the optimum the test saturates
  // (|f| * eps swamps step * ||g||^2) and the loop falls back to the safe
  // fixed step 1/L, which decreases f for any L-smooth objective.
  const double safe_step = 1.0 / estimate_constants(model, datasets).smooth;

  Vec w(static_cast<std::size_t>(k) * d, 0.0);
  double fw = global_loss(model, w, datasets, weights);
  double step = 1.0;
  Vec trial(w.size());
  double grad_norm = 0.0;
  for (int it = 0; it < kGdMaxIters; ++it) {
    const Vec g = global_grad(model, w, datasets, weights);
    const double gsq = norm_sq(g);
    grad_norm = std::sqrt(gsq);
    if (grad_norm <= kGdTarget) return w;
    step = std::min(step * 2.0, 1e6);
    bool moved = false;
    while (step * gsq * 1e-4 > 4e-16 * std::abs(fw)) {
      for (std::size_t i = 0; i < w.size(); ++i) trial[i] = w[i] - step * g[i];
      const double ft = global_loss(model, trial, datasets, weights);
      if (ft <= fw - 1e-4 * step * gsq) {
        w = trial;
        fw = ft;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      if (grad_norm <= kGdAccept) return w;  // saturated inside the contract
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= safe_step * g[i];
      fw = global_loss(model, w, datasets, weights);
    }
  }
  if (grad_norm <= kGdAccept) return w;
  throw NumericError("minimize: gradient descent stopped with gradient norm " +
                     std::to_string(grad_norm) + " above tolerance 1e-9");
}

Vec minimize_ridge(const LossModel& model, std::span<const Dataset> datasets,
                   std::span<const double> weights) {
  const int d = datasets.front().feature_dim();
  for (const Dataset& ds : datasets) {
    if (ds.feature_dim() != d)
      throw DimensionError("minimize: datasets disagree on feature dim");
    if (ds.classification())
      throw DimensionError("minimize: ridge expects regression datasets");
  }
  SymMatrix h(d);
  Vec rhs(static_cast<std::size_t>(d), 0.0);
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    const Dataset& ds = datasets[i];
    const double c = weights[i] / static_cast<double>(ds.size());
    for (const LabeledSample& s : ds.samples()) {
      h.add_outer(c, s.features);
      axpy(c * s.label, s.features, rhs);
    }
  }
  h.add_diag(model.l2_coeff);
  try {
    return spd_solve(h, std::move(rhs));
  } catch (const NumericError&) {
    throw NumericError(
        "minimize: ridge normal equations are singular (strong convexity "
        "constant <= 0); set l2_coeff > 0 or provide full-rank data");
  }
}

}  // namespace

int param_dim(const LossModel& model, const Dataset& dataset) {
  if (model.kind == ModelKind::ridge_regression) return dataset.feature_dim();
  if (dataset.num_classes() < 1)
    throw DimensionError("param_dim: logistic model needs a classification dataset");
  return dataset.num_classes() * dataset.feature_dim();
}

double per_sample_loss(const LossModel& model, std::span<const double> w,
                       const LabeledSample& s) {
  const double reg = 0.5 * model.l2_coeff * norm_sq(w);
  if (model.kind == ModelKind::ridge_regression) {
    check_ridge_dims(w, s);
    const double r = dot(w, s.features) - s.label;
    return 0.5 * r * r + reg;
  }
  const int k = logistic_classes(w, s);
  static thread_local Vec probs;
  class_probs(w, s.features, k, probs);
  const double py = probs[static_cast<std::size_t>(static_cast<int>(s.label))];
  return -std::log(std::max(py, 1e-300)) + reg;
}

Vec per_sample_grad(const LossModel& model, std::span<const double> w,
                    const LabeledSample& s) {
  Vec g(w.size(), 0.0);
  if (model.l2_coeff != 0.0) axpy(model.l2_coeff, w, g);
  if (model.kind == ModelKind::ridge_regression) {
    check_ridge_dims(w, s);
    axpy(dot(w, s.features) - s.label, s.features, g);
    return g;
  }
  const int k = logistic_classes(w, s);
  const std::size_t d = s.features.size();
  static thread_local Vec probs;
  class_probs(w, s.features, k, probs);
  const int y = static_cast<int>(s.label);
  for (int c = 0; c < k; ++c) {
    const double coef = probs[static_cast<std::size_t>(c)] - (c == y ? 1.0 : 0.0);
    axpy(coef, s.features, std::span<double>(g).subspan(static_cast<std::size_t>(c) * d, d));
  }
  return g;
}

double empirical_loss(const LossModel& model, std::span<const double> w,
                      const Dataset& dataset) {
  if (dataset.size() == 0) throw DimensionError("empirical_loss: empty dataset");
  double sum = 0.0;
  for (const LabeledSample& s : dataset.samples()) sum += per_sample_loss(model, w, s);
  return sum / static_cast<double>(dataset.size());
}

Vec empirical_grad(const LossModel& model, std::span<const double> w,
                   const Dataset& dataset) {
  if (dataset.size() == 0) throw DimensionError("empirical_grad: empty dataset");
  Vec g(w.size(), 0.0);
  // Accumulate the data terms in place (one per-sample allocation per call
  // would dominate the minimizers on wide models) and add the shared
  // regularizer term once at the end.
  if (model.kind == ModelKind::ridge_regression) {
    for (const LabeledSample& s : dataset.samples()) {
      check_ridge_dims(w, s);
      axpy(dot(w, s.features) - s.label, s.features, g);
    }
  } else {
    const std::size_t d = static_cast<std::size_t>(dataset.feature_dim());
    static thread_local Vec probs;
    for (const LabeledSample& s : dataset.samples()) {
      const int k = logistic_classes(w, s);
      class_probs(w, s.features, k, probs);
      const int y = static_cast<int>(s.label);
      for (int c = 0; c < k; ++c) {
        const double coef = probs[static_cast<std::size_t>(c)] - (c == y ? 1.0 : 0.0);
        axpy(coef, s.features,
             std::span<double>(g).subspan(static_cast<std::size_t>(c) * d, d));
      }
    }
  }
  scale(1.0 / static_cast<double>(dataset.size()), g);
  if (model.l2_coeff != 0.0) axpy(model.l2_coeff, w, g);
  return g;
}

double global_loss(const LossModel& model, std::span<const double> w,
                   std::span<const Dataset> datasets,
                   std::span<const double> weights) {
  check_weights(datasets, weights);
  double sum = 0.0;
  for (std::size_t i = 0; i < datasets.size(); ++i)
    sum += weights[i] * empirical_loss(model, w, datasets[i]);
  return sum;
}

Vec global_grad(const LossModel& model, std::span<const double> w,
                std::span<const Dataset> datasets,
                std::span<const double> weights) {
  check_weights(datasets, weights);
  Vec g(w.size(), 0.0);
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    const Vec gi = empirical_grad(model, w, datasets[i]);
    axpy(weights[i], gi, g);
  }
  return g;
}

ConvexityConstants estimate_constants(const LossModel& model,
                                      std::span<const Dataset> datasets) {
  if (datasets.empty()) throw DimensionError("estimate_constants: no datasets");
  double top = 0.0;
  double bottom = 1e300;
  for (const Dataset& ds : datasets) {
    const MatVec op = gram_operator(ds);
    top = std::max(top, dominant_eigenvalue(op, ds.feature_dim()));
    if (model.kind == ModelKind::ridge_regression)
      bottom = std::min(bottom, smallest_eigenvalue(op, ds.feature_dim()));
  }
  ConvexityConstants out;
  if (model.kind == ModelKind::ridge_regression) {
    out.smooth = top + model.l2_coeff;
    out.strong = bottom + model.l2_coeff;
    if (out.strong <= out.smooth * 1e-12) {
      throw NumericError(
          "estimate_constants: strong convexity constant is not positive "
          "(rank-deficient data with l2_coeff = 0); set l2_coeff > 0");
    }
  } else {
    if (model.l2_coeff <= 0.0) {
      throw NumericError(
          "estimate_constants: logistic model needs l2_coeff > 0 for a "
          "positive strong convexity constant");
    }
    out.smooth = model.l2_coeff + 0.25 * top;
    out.strong = model.l2_coeff;
  }
  return out;
}

Vec minimize(const LossModel& model, const Dataset& dataset) {
  const Dataset* one = &dataset;
  const double w1 = 1.0;
  return minimize(model, std::span<const Dataset>(one, 1),
                  std::span<const double>(&w1, 1));
}

Vec minimize(const LossModel& model, std::span<const Dataset> datasets,
             std::span<const double> weights) {
  check_weights(datasets, weights);
  if (model.kind == ModelKind::ridge_regression)
    return minimize_ridge(model, datasets, weights);
  if (model.l2_coeff <= 0.0)
    throw NumericError("minimize: logistic model needs l2_coeff > 0");
  return minimize_logistic(model, datasets, weights);
}

}  // namespace lceme
