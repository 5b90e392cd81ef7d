#include "lceme/labeling.hpp"

#include <algorithm>
#include <cmath>

#include "lceme/errors.hpp"

namespace lceme {

Dataset apply_labeling(const Dataset& dataset, int effort, RngStream& rng) {
  if (effort != 0 && effort != 1)
    throw NumericError("apply_labeling: effort must be 0 or 1");
  if (effort == 1) return dataset;

  std::vector<LabeledSample> corrupted = dataset.samples();
  if (dataset.classification()) {
    const auto k = static_cast<std::uint64_t>(dataset.num_classes());
    for (LabeledSample& s : corrupted)
      s.label = static_cast<double>(rng.next_below(k));
  } else {
    const double cap = std::sqrt(dataset.y_max_sq());
    for (LabeledSample& s : corrupted) s.label = rng.next_uniform(-cap, cap);
  }
  return Dataset(std::move(corrupted), dataset.num_classes(), dataset.x_max_sq(),
                 dataset.y_max_sq());
}

BetaBound compute_beta_analytic(const LossModel& model, double x_max_sq,
                                double y_max_sq, int num_classes, bool strict) {
  if (!(x_max_sq >= 0.0) || !(y_max_sq >= 0.0) || !std::isfinite(x_max_sq) ||
      !std::isfinite(y_max_sq)) {
    throw NumericError("compute_beta_analytic: bounds must be finite and >= 0");
  }
  BetaBound out;
  out.method = BetaBound::Method::analytic;
  switch (model.kind) {
    case ModelKind::ridge_regression:
      out.value = (strict ? 4.0 : 2.0) * y_max_sq * x_max_sq;
      return out;
    case ModelKind::multinomial_logistic:
      out.value = num_classes <= 1 ? 0.0 : 2.0 * x_max_sq;
      return out;
  }
  throw NumericError("compute_beta_analytic: unsupported model kind");
}

BetaBound compute_beta_empirical(const LossModel& model, const Dataset& dataset,
                                 std::span<const Vec> w_probes) {
  if (w_probes.empty())
    throw DimensionError("compute_beta_empirical: probe list must not be empty");

  // Candidate replacement labels. For regression the gap is convex in the
  // replacement, so only the interval endpoints can attain the sup.
  std::vector<double> replacements;
  if (dataset.classification()) {
    for (int c = 0; c < dataset.num_classes(); ++c)
      replacements.push_back(static_cast<double>(c));
  } else {
    const double cap = std::sqrt(dataset.y_max_sq());
    replacements = {-cap, cap};
  }

  double worst = 0.0;
  for (const Vec& w : w_probes) {
    for (const LabeledSample& s : dataset.samples()) {
      const Vec g = per_sample_grad(model, w, s);
      LabeledSample swapped = s;
      for (double y : replacements) {
        swapped.label = y;
        const Vec g2 = per_sample_grad(model, w, swapped);
        worst = std::max(worst, dist_sq(g, g2));
      }
    }
  }
  BetaBound out;
  out.value = worst;
  out.method = BetaBound::Method::brute_force;
  return out;
}

}  // namespace lceme
