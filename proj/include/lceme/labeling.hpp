#pragma once

#include <span>

#include "lceme/data.hpp"
#include "lceme/model.hpp"
#include "lceme/rng.hpp"

namespace lceme {

// Manual-labeling effort model. Effort is binary: a client who labels
// carefully (effort = 1) produces the dataset as-is; one who withholds effort
// (effort = 0) produces labels that carry no information about the features.

// Returns the dataset a client ends up training on. effort = 1 is the
// identity. effort = 0 resamples every label independently of the original
// one: uniformly over the classes for classification, uniformly over
// [-sqrt(y_max_sq), +sqrt(y_max_sq)] for regression. Features, sample count
// and order are untouched. Deterministic given the stream state; the draws
// never read the original labels, so permuting them changes nothing.
Dataset apply_labeling(const Dataset& dataset, int effort, RngStream& rng);

struct BetaBound {
  enum class Method { analytic, brute_force };
  double value = 0.0;
  Method method = Method::analytic;
};

// Closed-form bound on the squared gradient gap between a sample and its
// no-effort relabeling.
//
// Ridge: 2 * y_max_sq * x_max_sq, which covers the expectation over a uniform
// relabel. `strict` switches to 4 * y_max_sq * x_max_sq, the worst single
// swap (y -> -y); brute-force maximization can reach that, so dominance
// checks compare against the strict value. Logistic: 2 * x_max_sq either way
// (a one-hot swap has squared norm 2).
BetaBound compute_beta_analytic(const LossModel& model, double x_max_sq,
                                double y_max_sq, int num_classes,
                                bool strict = false);

// Brute-force sup of ||grad f(w, xi) - grad f(w, xi')||^2 over every sample,
// every replacement label (all classes, or the regression interval's
// endpoints where the gap is maximized), and every supplied parameter probe.
// Diagnostic only; the mechanism uses the analytic value.
BetaBound compute_beta_empirical(const LossModel& model, const Dataset& dataset,
                                 std::span<const Vec> w_probes);

}  // namespace lceme
