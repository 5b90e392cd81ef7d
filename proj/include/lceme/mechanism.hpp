#pragma once

#include <span>
#include <vector>

#include "lceme/bound.hpp"

namespace lceme {

// Cost side of the market: one uniform labeling cost c_l and per-client
// per-sample computation costs c_p.
struct CostProfile {
  double label_cost = 0.0;
  std::vector<double> comp_cost;

  void validate(int num_clients) const;
};

// A concrete mechanism instance: the desired efforts are implicitly
// e' = gamma' = 1 for everyone, plus the per-client assigned batch sizes and
// the derived payment constants.
//
// `batch` holds the integer sizes clients are asked to simulate with;
// mechanism formulas are evaluated at exactly these values so the truthful
// payoff cancels to 0. `batch_real` keeps the optimizer's real-valued point
// for diagnostics. `baseline` is subtracted from the observed test loss in
// the reward; 0 is the literal rule, setting it to an estimate of F(w*)
// centers realized payoffs for IR experiments without touching incentives
// (it is constant in any one client's strategy).
struct Assignment {
  std::vector<int> batch;        // D'
  std::vector<double> batch_real;
  std::vector<double> phi;       // Phi(D_i')
  std::vector<double> omega;     // Omega_i
  std::vector<double> min_batch; // feasibility floors
  double series_A = 0.0;
  double baseline = 0.0;

  int num_clients() const { return static_cast<int>(batch.size()); }
};

// Phi(D') = D'^2 c_p T / (A sigma^2 p (p + 2(H-1)^2)).
// This is exactly the scaling that puts the payoff's stationary point in D
// at D', for any feasible D'.
double phi_coefficient(double batch_assigned, double comp_cost, int rounds,
                       double series_A, double sigma_sq, double weight,
                       int local_iters);

// Feasibility floor on the assigned batch size:
// D' >= sigma * sqrt(c_l p (p + 2(H-1)^2) / (beta c_p T (1 + 2(H-1)^2))).
// Below it, skipping the labeling effort pays. beta = 0 with c_l > 0 is
// infeasible (labeling can then never be incentivized) and throws.
double min_feasible_batch(double sigma_sq, double label_cost, double weight,
                          int local_iters, double beta, double comp_cost,
                          int rounds);

// Loss bound at truthful strategies (e=1, gamma=1) with real-valued batch
// sizes; the bracket inside Omega and the loss part of the server surrogate.
double truthful_loss_bound(const BoundInputs& b, std::span<const double> batch);

// Omega_i = Phi_i * truthful bound value + T c_p^i D_i'.
double omega_payment(double phi, double truthful_bound_value, int rounds,
                     double comp_cost, double batch_assigned);

// Builds the full Assignment (Phi, Omega, A, floors) for given integer batch
// sizes. Does not reject infeasible batches: verification is the place where
// a tampered assignment is supposed to fail, not construction.
Assignment make_assignment(const BoundInputs& b, const CostProfile& costs,
                           std::vector<int> batch, double baseline = 0.0);

// The server's payoff-maximizing assignment:
// D_i* = max{ sqrt(A sigma_i^2 p_i (p_i + 2(H-1)^2) / (c_p^i T)), floor_i },
// the stationary point of the bound-plus-payment objective. Batch sizes are
// rounded up to integers; batch_real keeps the exact values.
// `compat_form` switches the first term to
// sqrt(A (p_i^2 sigma_i^2 + 2 p_i (H-1)^2) / (c_p^i T)) for comparison runs;
// it is not the stationary point and loses the grid-optimality property.
Assignment optimal_assignment(const BoundInputs& b, const CostProfile& costs,
                              double baseline = 0.0, bool compat_form = false);

// r_i = Omega_i - Phi_i * (observed_loss - baseline) + c_l.
double reward_payment(int client, const Assignment& a, const CostProfile& costs,
                      double observed_loss);

// Client `client`'s approximated expected payoff at a unilateral strategy,
// all other clients truthful:
//
//   u_hat = Phi_i A sigma_i^2 p_i (p_i + 2(H-1)^2) (1/D' - 1/D)
//           + T c_p^i (D' - D)
//           - (Phi_i A beta (1 + 2(H-1)^2) - c_l) (1 - e)
//           - Phi_i A 2 p_i (gamma-1)^2 (G^2 + sigma_i^2/D + (1-e) beta)
//
// Exactly 0 at (e=1, D=D', gamma=1). The labeling terms carry no extra p_i
// factor: that is the only form consistent with the feasibility floor above
// (the effort-dominance difference is then tight exactly at the floor).
double payoff_hat(int client, const ClientStrategy& strategy, const Assignment& a,
                  const BoundInputs& b, const CostProfile& costs);

// Same payoff at a real-valued batch size. Simulated batches are counts, but
// the payoff itself is smooth in D; this is what stationarity checks and the
// assignment optimizer differentiate.
double payoff_hat_at(int client, int effort, double batch, double gamma,
                     const Assignment& a, const BoundInputs& b,
                     const CostProfile& costs);

struct PayoffRecord {
  double reward = 0.0;
  double labeling_cost = 0.0;  // c_l * e
  double comp_cost = 0.0;      // T * c_p * D
  double payoff = 0.0;         // reward - labeling_cost - comp_cost
  double payoff_hat = 0.0;
};

PayoffRecord realized_payoff(int client, const ClientStrategy& strategy,
                             const Assignment& a, const BoundInputs& b,
                             const CostProfile& costs, double observed_loss);

struct ServerRecord {
  double test_loss = 0.0;
  double total_reward = 0.0;
  double payoff = 0.0;  // -test_loss - total_reward
};

ServerRecord server_payoff(double observed_loss, std::span<const double> rewards);

// The bound-based surrogate the server optimizes, assuming truthful play:
// -(loss_bound at e=1, gamma=1, D=D'  +  sum_i (c_l + T c_p^i D_i')).
// Throws NumericError for an infeasible allocation.
double bound_server_payoff_at(const BoundInputs& b, const CostProfile& costs,
                              std::span<const double> batch);
double bound_server_payoff(const Assignment& a, const BoundInputs& b,
                           const CostProfile& costs);

// Unilateral-deviation grid. Defaults cover gamma in {0, 0.25, ..., 2},
// D in {1, ..., 2 D_i'} and both effort levels.
struct DeviationGrid {
  std::vector<double> gammas = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  int batch_cap_factor = 2;
};

struct ClientCertificate {
  double truthful = 0.0;          // payoff_hat at (1, D', 1)
  double worst_deviation = 0.0;   // max payoff_hat over non-truthful grid points
  ClientStrategy worst_strategy;
  bool pass = false;
};

struct TruthfulnessCertificate {
  std::vector<ClientCertificate> clients;
  bool pass = false;
};

// Nash-equilibrium check by exhaustive grid evaluation: passes iff every
// truthful payoff is 0 within 1e-9 and every deviation's payoff is <= 1e-9.
// A failed certificate is a result, not an error.
TruthfulnessCertificate verify_truthfulness(const Assignment& a,
                                            const BoundInputs& b,
                                            const CostProfile& costs,
                                            const DeviationGrid& grid = {});

struct IrCertificate {
  std::vector<double> truthful;
  bool pass = false;
};

// Individual rationality: truthful payoff_hat >= -1e-9 for every client
// (it is exactly 0 under this payoff convention).
IrCertificate verify_ir(const Assignment& a, const BoundInputs& b,
                        const CostProfile& costs);

}  // namespace lceme
