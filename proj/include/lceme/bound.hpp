#pragma once

#include <span>
#include <vector>

#include "lceme/sim.hpp"

namespace lceme {

// Everything the training-loss bound needs. All of it must be populated with
// the constants of one concrete configuration; validate() names the first
// violated hypothesis.
struct BoundInputs {
  double smooth = 0.0;        // L
  double strong = 0.0;        // mu
  double eta = 0.0;           // step size, <= 1/(2L)
  int rounds = 1;             // T
  int local_iters = 1;        // H
  double beta = 0.0;          // no-effort gradient gap bound
  double grad_bound_sq = 0.0; // G^2
  double init_dist_sq = 0.0;  // ||w0 - w*||^2
  std::vector<double> weight;    // p_i
  std::vector<double> sigma_sq;  // sigma_i^2
  std::vector<double> het;       // d_i

  int num_clients() const { return static_cast<int>(weight.size()); }
  void validate() const;
};

// A = 2 L eta (1 - (1 - mu eta)^(TH)) / mu, the closed form of
// 2 L eta^2 sum_{k=0}^{TH-1} (1 - mu eta)^k. Requires 0 < mu*eta < 1.
double geometric_series_constant(double smooth, double strong, double eta,
                                 int rounds, int local_iters);

// Upper bound on E[F(w_T) - F(w*)] as a function of the clients' strategies:
//
//   L (1-mu eta)^(TH) ||w0 - w*||^2
//   + A * sum_i [ p_i^2 sigma_i^2 / D_i + 6 L p_i d_i + p_i (1-e_i) beta
//                 + 2 p_i ((gamma_i - 1)^2 + (H-1)^2)
//                   (G^2 + sigma_i^2 / D_i + (1-e_i) beta) ]
//
// with the (t, h) double sum collapsed to the geometric constant A.
double loss_bound(const BoundInputs& b, std::span<const ClientStrategy> strategies);

// Same value computed with the O(TH) term-by-term sum; cross-check only.
double loss_bound_term_sum(const BoundInputs& b,
                           std::span<const ClientStrategy> strategies);

enum class StrategyComponent { batch, effort, gamma };

// Per-client bound deltas for the canonical unilateral changes:
//   batch:  D_i -> D_i + 1        (delta <= 0)
//   effort: e_i 0 -> 1            (delta <= 0, < 0 when beta > 0)
//   gamma:  gamma_i 1 -> gamma_i  (delta >= 0, symmetric in gamma about 1)
// Each delta is bound(after) - bound(before) with every other client held at
// the supplied strategy.
std::vector<double> bound_sensitivity(const BoundInputs& b,
                                      std::span<const ClientStrategy> strategies,
                                      StrategyComponent which);

namespace detail {
// Shared evaluator over real-valued batch sizes (the mechanism evaluates the
// bound at non-integer D).
double bound_at(const BoundInputs& b, std::span<const double> batch,
                std::span<const int> effort, std::span<const double> gamma,
                bool term_by_term);
}  // namespace detail

}  // namespace lceme
