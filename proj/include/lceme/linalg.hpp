#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace lceme {

using Vec = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm_sq(std::span<const double> a);
double dist_sq(std::span<const double> a, std::span<const double> b);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void scale(double alpha, std::span<double> x);

// Dense symmetric matrix, full row-major storage.
struct SymMatrix {
  int n = 0;
  std::vector<double> a;  // n*n entries

  explicit SymMatrix(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {}
  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

  // rank-1 update: A += alpha * x x^T
  void add_outer(double alpha, std::span<const double> x);
  void add_diag(double alpha);
  void apply(std::span<const double> x, std::span<double> out) const;
};

// Solves A x = b for symmetric positive definite A via Cholesky.
// Throws NumericError when A is not (numerically) positive definite.
Vec spd_solve(const SymMatrix& a, Vec b);

// Dominant eigenvalue of a symmetric PSD operator given as v -> A v.
//
// Power iteration, relative residual tolerance, capped iterations. Runs once
// from the first basis vector and once from a seed-derived random vector and
// keeps the larger Rayleigh estimate: e1 can be an exact eigenvector of a
// non-dominant eigenvalue (residual 0, no stagnation signal), and the second
// start is the deterministic re-randomization that covers that case.
using MatVec = std::function<void(std::span<const double>, std::span<double>)>;
double dominant_eigenvalue(const MatVec& apply, int dim, double tol = 1e-10,
                           int max_iters = 10000, std::uint64_t seed = 0);

// Smallest eigenvalue of a symmetric PSD operator via the spectral shift
// lambda_min(A) = s - lambda_max(s I - A) with s = lambda_max(A).
double smallest_eigenvalue(const MatVec& apply, int dim, double tol = 1e-10,
                           int max_iters = 10000, std::uint64_t seed = 0);

}  // namespace lceme
