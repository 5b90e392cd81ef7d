#include "lceme/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "lceme/errors.hpp"
#include "lceme/rng.hpp"

namespace lceme {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_sq(std::span<const double> a) { return dot(a, a); }

double dist_sq(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale(double alpha, std::span<double> x) {
  for (double& v : x) v *= alpha;
}

void SymMatrix::add_outer(double alpha, std::span<const double> x) {
  for (int i = 0; i < n; ++i) {
    const double axi = alpha * x[static_cast<std::size_t>(i)];
    double* row = a.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) row[j] += axi * x[static_cast<std::size_t>(j)];
  }
}

void SymMatrix::add_diag(double alpha) {
  for (int i = 0; i < n; ++i) at(i, i) += alpha;
}

void SymMatrix::apply(std::span<const double> x, std::span<double> out) const {
  for (int i = 0; i < n; ++i) {
    const double* row = a.data() + static_cast<std::size_t>(i) * n;
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += row[j] * x[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = s;
  }
}

Vec spd_solve(const SymMatrix& a, Vec b) {
  const int n = a.n;
  // Lower-triangular Cholesky factor, in-place on a copy.
  std::vector<double> l = a.a;
  double scale_hint = 0.0;
  for (int i = 0; i < n; ++i) scale_hint = std::max(scale_hint, std::abs(a.at(i, i)));
  const double pivot_floor = std::max(scale_hint, 1.0) * 1e-14;

  for (int j = 0; j < n; ++j) {
    double d = l[static_cast<std::size_t>(j) * n + j];
    for (int k = 0; k < j; ++k) {
      const double ljk = l[static_cast<std::size_t>(j) * n + k];
      d -= ljk * ljk;
    }
    if (d <= pivot_floor) {
      throw NumericError(
          "spd_solve: matrix is not positive definite (pivot " +
          std::to_string(d) + " at index " + std::to_string(j) + ")");
    }
    const double dj = std::sqrt(d);
    l[static_cast<std::size_t>(j) * n + j] = dj;
    for (int i = j + 1; i < n; ++i) {
      double s = l[static_cast<std::size_t>(i) * n + j];
      for (int k = 0; k < j; ++k) {
        s -= l[static_cast<std::size_t>(i) * n + k] *
             l[static_cast<std::size_t>(j) * n + k];
      }
      l[static_cast<std::size_t>(i) * n + j] = s / dj;
    }
  }

  // Forward then backward substitution.
  for (int i = 0; i < n; ++i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int k = 0; k < i; ++k)
      s -= l[static_cast<std::size_t>(i) * n + k] * b[static_cast<std::size_t>(k)];
    b[static_cast<std::size_t>(i)] = s / l[static_cast<std::size_t>(i) * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < n; ++k)
      s -= l[static_cast<std::size_t>(k) * n + i] * b[static_cast<std::size_t>(k)];
    b[static_cast<std::size_t>(i)] = s / l[static_cast<std::size_t>(i) * n + i];
  }
  return b;
}

namespace {

// One power-iteration run from a given unit start vector; returns the
// Rayleigh estimate once the relative residual drops below tol (or the
// iteration cap is hit — the last estimate is still returned; callers take
// the max across starts which keeps that safe for PSD operators).
double power_run(const MatVec& apply, Vec v, double tol, int max_iters) {
  const int n = static_cast<int>(v.size());
  Vec av(static_cast<std::size_t>(n), 0.0);
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    apply(v, av);
    lambda = dot(v, av);
    double res_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = av[static_cast<std::size_t>(i)] - lambda * v[static_cast<std::size_t>(i)];
      res_sq += r * r;
    }
    const double av_norm = std::sqrt(norm_sq(av));
    if (av_norm <= 1e-300) return 0.0;  // operator annihilates this vector
    if (std::sqrt(res_sq) <= tol * std::max(std::abs(lambda), 1e-300)) return lambda;
    const double inv = 1.0 / av_norm;
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = av[static_cast<std::size_t>(i)] * inv;
  }
  return lambda;
}

Vec unit_basis(int dim) {
  Vec v(static_cast<std::size_t>(dim), 0.0);
  v[0] = 1.0;
  return v;
}

Vec unit_random(int dim, std::uint64_t seed) {
  RngStream rng = RngStream::substream(seed, {0x9077e21u});
  Vec v(static_cast<std::size_t>(dim));
  double nrm = 0.0;
  while (nrm <= 1e-30) {
    for (double& x : v) x = rng.next_gaussian();
    nrm = std::sqrt(norm_sq(v));
  }
  scale(1.0 / nrm, v);
  return v;
}

}  // namespace

double dominant_eigenvalue(const MatVec& apply, int dim, double tol,
                           int max_iters, std::uint64_t seed) {
  if (dim <= 0) throw DimensionError("dominant_eigenvalue: dimension must be positive");
  const double from_basis = power_run(apply, unit_basis(dim), tol, max_iters);
  if (dim == 1) return from_basis;
  const double from_random = power_run(apply, unit_random(dim, seed), tol, max_iters);
  return std::max(from_basis, from_random);
}

double smallest_eigenvalue(const MatVec& apply, int dim, double tol,
                           int max_iters, std::uint64_t seed) {
  const double top = dominant_eigenvalue(apply, dim, tol, max_iters, seed);
  if (top <= 0.0) return 0.0;
  MatVec shifted = [&apply, top](std::span<const double> x, std::span<double> out) {
    apply(x, out);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = top * x[i] - out[i];
  };
  const double gap = dominant_eigenvalue(shifted, dim, tol, max_iters, seed + 1);
  return std::max(0.0, top - gap);
}

}  // namespace lceme
