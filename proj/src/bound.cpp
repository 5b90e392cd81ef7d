#include "lceme/bound.hpp"

#include <cmath>
#include <string>

#include "lceme/errors.hpp"

namespace lceme {

void BoundInputs::validate() const {
  if (!(strong > 0.0)) throw NumericError("bound hypothesis violated: mu <= 0");
  if (!(smooth >= strong))
    throw NumericError("bound hypothesis violated: L < mu (L=" +
                       std::to_string(smooth) + ", mu=" + std::to_string(strong) + ")");
  if (!(eta > 0.0)) throw NumericError("bound hypothesis violated: eta <= 0");
  if (eta > 0.5 / smooth + 1e-15)
    throw NumericError("bound hypothesis violated: eta > 1/(2L) (eta=" +
                       std::to_string(eta) + ", 1/(2L)=" + std::to_string(0.5 / smooth) + ")");
  const double q = strong * eta;
  if (!(q > 0.0 && q < 1.0))
    throw NumericError("bound hypothesis violated: mu*eta outside (0,1)");
  if (rounds < 1) throw NumericError("bound hypothesis violated: T < 1");
  if (local_iters < 1) throw NumericError("bound hypothesis violated: H < 1");
  if (weight.empty()) throw DimensionError("bound inputs: empty roster");
  if (sigma_sq.size() != weight.size() || het.size() != weight.size())
    throw DimensionError("bound inputs: per-client arrays disagree in length");
  double sum = 0.0;
  for (double p : weight) {
    if (!(p >= 0.0)) throw NumericError("bound inputs: negative weight");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw NumericError("bound inputs: weights sum to " + std::to_string(sum) +
                       ", expected 1 within 1e-12");
  for (double s : sigma_sq)
    if (!(s >= 0.0)) throw NumericError("bound inputs: negative sigma_sq");
  for (double d : het)
    if (!(d >= 0.0)) throw NumericError("bound inputs: negative heterogeneity");
  if (!(beta >= 0.0)) throw NumericError("bound inputs: negative beta");
  if (!(grad_bound_sq >= 0.0)) throw NumericError("bound inputs: negative G^2");
  if (!(init_dist_sq >= 0.0)) throw NumericError("bound inputs: negative init_dist_sq");
}

double geometric_series_constant(double smooth, double strong, double eta,
                                 int rounds, int local_iters) {
  const double q = strong * eta;
  if (!(q > 0.0 && q < 1.0))
    throw NumericError("geometric_series_constant: mu*eta outside (0,1)");
  const double total = static_cast<double>(rounds) * local_iters;
  return 2.0 * smooth * eta * (1.0 - std::pow(1.0 - q, total)) / strong;
}

namespace detail {

double bound_at(const BoundInputs& b, std::span<const double> batch,
                std::span<const int> effort, std::span<const double> gamma,
                bool term_by_term) {
  b.validate();
  const std::size_t n = b.weight.size();
  if (batch.size() != n || effort.size() != n || gamma.size() != n)
    throw DimensionError("loss_bound: strategy arrays disagree with roster size");

  const double hm1_sq = static_cast<double>(b.local_iters - 1) *
                        static_cast<double>(b.local_iters - 1);
  double per_iter = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(batch[i] >= 1.0))
      throw NumericError("loss_bound: batch size must be >= 1");
    const double p = b.weight[i];
    const double noise = b.sigma_sq[i] / batch[i];
    const double miss = (effort[i] == 0) ? b.beta : 0.0;
    const double drift_sq = (gamma[i] - 1.0) * (gamma[i] - 1.0);
    per_iter += p * p * noise + 6.0 * b.smooth * p * b.het[i] + p * miss +
                2.0 * p * (drift_sq + hm1_sq) * (b.grad_bound_sq + noise + miss);
  }

  const double q = 1.0 - b.strong * b.eta;
  const double total = static_cast<double>(b.rounds) * b.local_iters;
  const double head = b.smooth * std::pow(q, total) * b.init_dist_sq;

  double series;
  if (term_by_term) {
    series = 0.0;
    for (int t = 1; t <= b.rounds; ++t)
      for (int h = 1; h <= b.local_iters; ++h)
        series += std::pow(q, total - static_cast<double>(t - 1) * b.local_iters - h);
    series *= 2.0 * b.smooth * b.eta * b.eta;
  } else {
    series = geometric_series_constant(b.smooth, b.strong, b.eta, b.rounds,
                                       b.local_iters);
  }
  return head + series * per_iter;
}

}  // namespace detail

namespace {

struct Unpacked {
  std::vector<double> batch, gamma;
  std::vector<int> effort;
};

Unpacked unpack(std::span<const ClientStrategy> strategies) {
  Unpacked u;
  u.batch.reserve(strategies.size());
  u.gamma.reserve(strategies.size());
  u.effort.reserve(strategies.size());
  for (const ClientStrategy& s : strategies) {
    u.batch.push_back(static_cast<double>(s.batch));
    u.gamma.push_back(s.gamma);
    u.effort.push_back(s.effort);
  }
  return u;
}

}  // namespace

double loss_bound(const BoundInputs& b, std::span<const ClientStrategy> strategies) {
  const Unpacked u = unpack(strategies);
  return detail::bound_at(b, u.batch, u.effort, u.gamma, /*term_by_term=*/false);
}

double loss_bound_term_sum(const BoundInputs& b,
                           std::span<const ClientStrategy> strategies) {
  const Unpacked u = unpack(strategies);
  return detail::bound_at(b, u.batch, u.effort, u.gamma, /*term_by_term=*/true);
}

std::vector<double> bound_sensitivity(const BoundInputs& b,
                                      std::span<const ClientStrategy> strategies,
                                      StrategyComponent which) {
  Unpacked u = unpack(strategies);
  std::vector<double> deltas(strategies.size(), 0.0);
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    Unpacked base = u;
    Unpacked changed = u;
    switch (which) {
      case StrategyComponent::batch:
        changed.batch[i] = base.batch[i] + 1.0;
        break;
      case StrategyComponent::effort:
        base.effort[i] = 0;
        changed.effort[i] = 1;
        break;
      case StrategyComponent::gamma:
        base.gamma[i] = 1.0;
        changed.gamma[i] = strategies[i].gamma;
        break;
    }
    deltas[i] = detail::bound_at(b, changed.batch, changed.effort, changed.gamma, false) -
                detail::bound_at(b, base.batch, base.effort, base.gamma, false);
  }
  return deltas;
}

}  // namespace lceme
