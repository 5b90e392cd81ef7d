#include "lceme/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lceme/errors.hpp"

namespace lceme {

namespace {

double hm1_sq(int local_iters) {
  const double h = static_cast<double>(local_iters - 1);
  return h * h;
}

void check_roster(const BoundInputs& b, const CostProfile& costs,
                  std::size_t batch_count, const char* where) {
  if (batch_count != b.weight.size())
    throw DimensionError(std::string(where) + ": batch vector size " +
                         std::to_string(batch_count) + " != roster size " +
                         std::to_string(b.weight.size()));
  costs.validate(b.num_clients());
}

}  // namespace

double truthful_loss_bound(const BoundInputs& b, std::span<const double> batch) {
  const std::vector<int> effort(b.weight.size(), 1);
  const std::vector<double> gamma(b.weight.size(), 1.0);
  return detail::bound_at(b, batch, effort, gamma, /*term_by_term=*/false);
}

double omega_payment(double phi, double truthful_bound_value, int rounds,
                     double comp_cost, double batch_assigned) {
  return phi * truthful_bound_value +
         static_cast<double>(rounds) * comp_cost * batch_assigned;
}

void CostProfile::validate(int num_clients) const {
  if (!(label_cost >= 0.0))
    throw NumericError("cost profile: label_cost must be >= 0");
  if (static_cast<int>(comp_cost.size()) != num_clients)
    throw DimensionError("cost profile: " + std::to_string(comp_cost.size()) +
                         " comp costs for " + std::to_string(num_clients) + " clients");
  for (double c : comp_cost)
    if (!(c > 0.0)) throw NumericError("cost profile: comp costs must be > 0");
}

double phi_coefficient(double batch_assigned, double comp_cost, int rounds,
                       double series_A, double sigma_sq, double weight,
                       int local_iters) {
  const double denom =
      series_A * sigma_sq * weight * (weight + 2.0 * hm1_sq(local_iters));
  if (!(denom > 0.0)) {
    throw NumericError("phi_coefficient: A * sigma^2 * p * (p + 2(H-1)^2) = " +
                       std::to_string(denom) + " must be > 0 (is sigma_sq or the "
                       "weight zero?)");
  }
  return batch_assigned * batch_assigned * comp_cost * rounds / denom;
}

double min_feasible_batch(double sigma_sq, double label_cost, double weight,
                          int local_iters, double beta, double comp_cost,
                          int rounds) {
  if (label_cost == 0.0) return 0.0;  // labeling is free, the constraint is vacuous
  if (!(beta > 0.0)) {
    throw NumericError(
        "min_feasible_batch: beta = 0 with label_cost > 0 is infeasible; "
        "withheld labeling effort cannot be priced");
  }
  if (!(comp_cost > 0.0) || rounds < 1)
    throw NumericError("min_feasible_batch: need comp_cost > 0 and rounds >= 1");
  const double h2 = hm1_sq(local_iters);
  const double inside = label_cost * weight * (weight + 2.0 * h2) /
                        (beta * comp_cost * rounds * (1.0 + 2.0 * h2));
  return std::sqrt(sigma_sq) * std::sqrt(inside);
}

Assignment make_assignment(const BoundInputs& b, const CostProfile& costs,
                           std::vector<int> batch, double baseline) {
  b.validate();
  check_roster(b, costs, batch.size(), "make_assignment");
  Assignment a;
  a.baseline = baseline;
  a.series_A = geometric_series_constant(b.smooth, b.strong, b.eta, b.rounds,
                                         b.local_iters);
  const int n = b.num_clients();
  a.batch = std::move(batch);
  a.batch_real.reserve(n);
  a.phi.reserve(n);
  a.min_batch.reserve(n);
  std::vector<double> batch_d;
  batch_d.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (a.batch[static_cast<std::size_t>(i)] < 1)
      throw NumericError("make_assignment: assigned batch must be >= 1");
    const double d = static_cast<double>(a.batch[static_cast<std::size_t>(i)]);
    batch_d.push_back(d);
    a.batch_real.push_back(d);
    a.phi.push_back(phi_coefficient(d, costs.comp_cost[static_cast<std::size_t>(i)],
                                    b.rounds, a.series_A,
                                    b.sigma_sq[static_cast<std::size_t>(i)],
                                    b.weight[static_cast<std::size_t>(i)],
                                    b.local_iters));
    a.min_batch.push_back(min_feasible_batch(
        b.sigma_sq[static_cast<std::size_t>(i)], costs.label_cost,
        b.weight[static_cast<std::size_t>(i)], b.local_iters, b.beta,
        costs.comp_cost[static_cast<std::size_t>(i)], b.rounds));
  }
  const double bracket = truthful_loss_bound(b, batch_d);
  a.omega.reserve(n);
  for (int i = 0; i < n; ++i) {
    a.omega.push_back(omega_payment(a.phi[static_cast<std::size_t>(i)], bracket,
                                    b.rounds,
                                    costs.comp_cost[static_cast<std::size_t>(i)],
                                    batch_d[static_cast<std::size_t>(i)]));
  }
  return a;
}

Assignment optimal_assignment(const BoundInputs& b, const CostProfile& costs,
                              double baseline, bool compat_form) {
  b.validate();
  costs.validate(b.num_clients());
  const double series_A = geometric_series_constant(b.smooth, b.strong, b.eta,
                                                    b.rounds, b.local_iters);
  const int n = b.num_clients();
  const double h2 = hm1_sq(b.local_iters);
  std::vector<int> batch(static_cast<std::size_t>(n));
  std::vector<double> batch_real(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double p = b.weight[static_cast<std::size_t>(i)];
    const double s2 = b.sigma_sq[static_cast<std::size_t>(i)];
    const double cp = costs.comp_cost[static_cast<std::size_t>(i)];
    const double numerator = compat_form ? series_A * (p * p * s2 + 2.0 * p * h2)
                                          : series_A * s2 * p * (p + 2.0 * h2);
    const double stationary = std::sqrt(numerator / (cp * b.rounds));
    const double floor = min_feasible_batch(s2, costs.label_cost, p,
                                            b.local_iters, b.beta, cp, b.rounds);
    // Domain is D >= 1 (a batch holds at least one sample); the objective is
    // convex so the constrained optimum is the projection.
    const double real = std::max({stationary, floor, 1.0});
    batch_real[static_cast<std::size_t>(i)] = real;
    batch[static_cast<std::size_t>(i)] =
        std::max(1, static_cast<int>(std::ceil(real - 1e-12)));
  }
  Assignment a = make_assignment(b, costs, std::move(batch), baseline);
  a.batch_real = std::move(batch_real);
  return a;
}

double reward_payment(int client, const Assignment& a, const CostProfile& costs,
                      double observed_loss) {
  const auto i = static_cast<std::size_t>(client);
  return a.omega[i] - a.phi[i] * (observed_loss - a.baseline) + costs.label_cost;
}

double payoff_hat(int client, const ClientStrategy& strategy, const Assignment& a,
                  const BoundInputs& b, const CostProfile& costs) {
  return payoff_hat_at(client, strategy.effort, static_cast<double>(strategy.batch),
                       strategy.gamma, a, b, costs);
}

double payoff_hat_at(int client, int effort, double batch, double gamma,
                     const Assignment& a, const BoundInputs& b,
                     const CostProfile& costs) {
  const auto i = static_cast<std::size_t>(client);
  if (!(batch >= 1.0)) throw NumericError("payoff_hat: batch must be >= 1");
  if (effort != 0 && effort != 1)
    throw NumericError("payoff_hat: effort must be 0 or 1");
  const double p = b.weight[i];
  const double s2 = b.sigma_sq[i];
  const double h2 = hm1_sq(b.local_iters);
  const double phi_a = a.phi[i] * a.series_A;
  const double assigned = static_cast<double>(a.batch[i]);
  const double rounds = static_cast<double>(b.rounds);
  const double skipped = 1.0 - static_cast<double>(effort);
  const double drift = gamma - 1.0;

  const double batch_part =
      phi_a * s2 * p * (p + 2.0 * h2) * (1.0 / assigned - 1.0 / batch) +
      rounds * costs.comp_cost[i] * (assigned - batch);
  const double effort_part =
      -(phi_a * b.beta * (1.0 + 2.0 * h2) - costs.label_cost) * skipped;
  const double report_part = -phi_a * 2.0 * p * drift * drift *
                             (b.grad_bound_sq + s2 / batch + skipped * b.beta);
  return batch_part + effort_part + report_part;
}

PayoffRecord realized_payoff(int client, const ClientStrategy& strategy,
                             const Assignment& a, const BoundInputs& b,
                             const CostProfile& costs, double observed_loss) {
  PayoffRecord rec;
  rec.reward = reward_payment(client, a, costs, observed_loss);
  rec.labeling_cost = costs.label_cost * strategy.effort;
  rec.comp_cost = static_cast<double>(b.rounds) *
                  costs.comp_cost[static_cast<std::size_t>(client)] * strategy.batch;
  rec.payoff = rec.reward - rec.labeling_cost - rec.comp_cost;
  rec.payoff_hat = payoff_hat(client, strategy, a, b, costs);
  return rec;
}

ServerRecord server_payoff(double observed_loss, std::span<const double> rewards) {
  ServerRecord rec;
  rec.test_loss = observed_loss;
  for (double r : rewards) rec.total_reward += r;
  rec.payoff = -observed_loss - rec.total_reward;
  return rec;
}

double bound_server_payoff_at(const BoundInputs& b, const CostProfile& costs,
                              std::span<const double> batch) {
  b.validate();
  check_roster(b, costs, batch.size(), "bound_server_payoff");
  double payment = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double floor = min_feasible_batch(b.sigma_sq[i], costs.label_cost,
                                            b.weight[i], b.local_iters, b.beta,
                                            costs.comp_cost[i], b.rounds);
    if (batch[i] < floor - 1e-9 || batch[i] < 1.0) {
      throw NumericError("bound_server_payoff: batch " + std::to_string(batch[i]) +
                         " for client " + std::to_string(i) +
                         " is infeasible (floor " + std::to_string(floor) + ")");
    }
    payment += costs.label_cost + static_cast<double>(b.rounds) * costs.comp_cost[i] * batch[i];
  }
  return -(truthful_loss_bound(b, batch) + payment);
}

double bound_server_payoff(const Assignment& a, const BoundInputs& b,
                           const CostProfile& costs) {
  std::vector<double> batch;
  batch.reserve(a.batch.size());
  for (int d : a.batch) batch.push_back(static_cast<double>(d));
  return bound_server_payoff_at(b, costs, batch);
}

TruthfulnessCertificate verify_truthfulness(const Assignment& a,
                                            const BoundInputs& b,
                                            const CostProfile& costs,
                                            const DeviationGrid& grid) {
  constexpr double kTol = 1e-9;
  TruthfulnessCertificate cert;
  cert.pass = true;
  const int n = b.num_clients();
  for (int i = 0; i < n; ++i) {
    ClientCertificate cc;
    const ClientStrategy truthful{1, a.batch[static_cast<std::size_t>(i)], 1.0};
    cc.truthful = payoff_hat(i, truthful, a, b, costs);
    cc.worst_deviation = -1e300;
    const int cap = std::max(1, grid.batch_cap_factor * a.batch[static_cast<std::size_t>(i)]);
    for (int effort = 0; effort <= 1; ++effort) {
      for (double gamma : grid.gammas) {
        for (int d = 1; d <= cap; ++d) {
          const ClientStrategy s{effort, d, gamma};
          if (s.effort == truthful.effort && s.batch == truthful.batch &&
              s.gamma == truthful.gamma) {
            continue;
          }
          const double u = payoff_hat(i, s, a, b, costs);
          if (u > cc.worst_deviation) {
            cc.worst_deviation = u;
            cc.worst_strategy = s;
          }
        }
      }
    }
    cc.pass = std::abs(cc.truthful) <= kTol && cc.worst_deviation <= kTol;
    cert.pass = cert.pass && cc.pass;
    cert.clients.push_back(cc);
  }
  return cert;
}

IrCertificate verify_ir(const Assignment& a, const BoundInputs& b,
                        const CostProfile& costs) {
  constexpr double kTol = 1e-9;
  IrCertificate cert;
  cert.pass = true;
  for (int i = 0; i < b.num_clients(); ++i) {
    const ClientStrategy truthful{1, a.batch[static_cast<std::size_t>(i)], 1.0};
    const double u = payoff_hat(i, truthful, a, b, costs);
    cert.truthful.push_back(u);
    cert.pass = cert.pass && u >= -kTol;
  }
  return cert;
}

}  // namespace lceme
