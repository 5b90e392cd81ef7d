#pragma once

#include <span>

#include "lceme/data.hpp"
#include "lceme/linalg.hpp"

namespace lceme {

enum class ModelKind {
  ridge_regression,
  multinomial_logistic,
};

// A per-sample loss family. l2_coeff is the per-sample L2 regularizer
// (lambda/2)*||w||^2, applied inside f so every client objective F_i inherits
// the same strong-convexity modulus.
struct LossModel {
  ModelKind kind = ModelKind::ridge_regression;
  double l2_coeff = 0.0;
};

// Parameter vector length for a model over `dataset`:
// ridge -> d, logistic -> K*d (row-major by class).
int param_dim(const LossModel& model, const Dataset& dataset);

// f(w; xi). Ridge: 0.5*(x.w - y)^2 + (lambda/2)||w||^2.
// Logistic: cross-entropy of softmax(W x) + (lambda/2)||W||^2, K inferred
// from w.size() / x.size().
double per_sample_loss(const LossModel& model, std::span<const double> w,
                       const LabeledSample& s);

// Gradient of per_sample_loss in w.
Vec per_sample_grad(const LossModel& model, std::span<const double> w,
                    const LabeledSample& s);

// F_i(w): mean per-sample loss over the dataset.
double empirical_loss(const LossModel& model, std::span<const double> w,
                      const Dataset& dataset);

// grad F_i(w).
Vec empirical_grad(const LossModel& model, std::span<const double> w,
                   const Dataset& dataset);

// F(w) = sum_i p_i F_i(w). Weights must be non-negative and sum to 1
// within 1e-12.
double global_loss(const LossModel& model, std::span<const double> w,
                   std::span<const Dataset> datasets,
                   std::span<const double> weights);

Vec global_grad(const LossModel& model, std::span<const double> w,
                std::span<const Dataset> datasets,
                std::span<const double> weights);

struct ConvexityConstants {
  double smooth = 0.0;  // L: every F_i is L-smooth
  double strong = 0.0;  // mu: every F_i is mu-strongly convex
};

// Smoothness/strong-convexity constants shared by all client objectives.
//
// Ridge: the client Hessians are H_i = Gram_i + lambda I, so
// L = max_i lambda_max(Gram_i) + lambda and mu = min_i lambda_min(Gram_i)
// + lambda (power iteration, tol 1e-10, <= 10000 iterations). Errors out
// when mu would be <= 0 (rank-deficient data with lambda = 0).
// Logistic: mu = lambda exactly; L = lambda + (1/4) max_i lambda_max(Gram_i).
ConvexityConstants estimate_constants(const LossModel& model,
                                      std::span<const Dataset> datasets);

// argmin of empirical_loss. Ridge solves the normal equations directly;
// logistic runs full-gradient descent with Armijo backtracking until the
// gradient norm is <= 1e-9 (throws NumericError with the final norm when the
// iteration cap is hit).
Vec minimize(const LossModel& model, const Dataset& dataset);

// argmin of global_loss over the weighted client datasets.
Vec minimize(const LossModel& model, std::span<const Dataset> datasets,
             std::span<const double> weights);

}  // namespace lceme
