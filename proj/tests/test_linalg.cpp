#include "doctest.h"

#include <cmath>

#include "lceme/errors.hpp"
#include "lceme/linalg.hpp"
#include "lceme/rng.hpp"

using namespace lceme;

namespace {

MatVec dense_op(const SymMatrix& m) {
  return [&m](std::span<const double> x, std::span<double> out) { m.apply(x, out); };
}

}  // namespace

TEST_CASE("power iteration finds the top eigenvalue of a diagonal matrix") {
  // diag(0.5, 2): e1 is an exact eigenvector of the small eigenvalue, which
  // is exactly the trap the seeded restart has to escape.
  SymMatrix m(2);
  m.at(0, 0) = 0.5;
  m.at(1, 1) = 2.0;
  CHECK(dominant_eigenvalue(dense_op(m), 2) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(smallest_eigenvalue(dense_op(m), 2) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("eigenvalue extraction matches the 2x2 closed form") {
  // [[2, 0.7], [0.7, 1]]: eigenvalues (3 +- sqrt(1 + 4*0.49))/2.
  SymMatrix m(2);
  m.at(0, 0) = 2.0;
  m.at(0, 1) = m.at(1, 0) = 0.7;
  m.at(1, 1) = 1.0;
  const double disc = std::sqrt(1.0 + 4.0 * 0.49);
  CHECK(dominant_eigenvalue(dense_op(m), 2) ==
        doctest::Approx((3.0 + disc) / 2.0).epsilon(1e-9));
  CHECK(smallest_eigenvalue(dense_op(m), 2) ==
        doctest::Approx((3.0 - disc) / 2.0).epsilon(1e-9));
}

TEST_CASE("zero operator has zero eigenvalues") {
  SymMatrix m(3);
  CHECK(dominant_eigenvalue(dense_op(m), 3) == 0.0);
  CHECK(smallest_eigenvalue(dense_op(m), 3) == 0.0);
}

TEST_CASE("spd_solve inverts a hand-checked system") {
  // [[4, 1], [1, 3]] x = (1, 2) -> x = (1/11, 7/11)
  SymMatrix m(2);
  m.at(0, 0) = 4.0;
  m.at(0, 1) = m.at(1, 0) = 1.0;
  m.at(1, 1) = 3.0;
  const Vec x = spd_solve(m, {1.0, 2.0});
  CHECK(x[0] == doctest::Approx(1.0 / 11.0).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(7.0 / 11.0).epsilon(1e-12));
}

TEST_CASE("spd_solve rejects a singular matrix") {
  SymMatrix m(2);
  m.at(0, 0) = 1.0;
  m.at(0, 1) = m.at(1, 0) = 1.0;
  m.at(1, 1) = 1.0;
  CHECK_THROWS_AS(spd_solve(m, {1.0, 1.0}), NumericError);
}

TEST_CASE("rng streams are deterministic and path-separated") {
  RngStream a = RngStream::substream(42, {1, 2});
  RngStream b = RngStream::substream(42, {1, 2});
  RngStream c = RngStream::substream(42, {2, 1});
  const std::uint64_t va = a.next_u64();
  CHECK(va == b.next_u64());
  CHECK(va != c.next_u64());
}

TEST_CASE("rng uniform integers stay in range and cover it") {
  RngStream rng(7);
  std::vector<int> seen(5, 0);
  for (int i = 0; i < 1000; ++i) ++seen[static_cast<std::size_t>(rng.next_below(5))];
  for (int c : seen) CHECK(c > 100);
}
