#include <doctest.h>

#include <cmath>
#include <vector>

#include "core/errors.hpp"
#include "core/integrate.hpp"
#include "oracles.hpp"

using namespace ltvdet;
using ltvdet::testing::expm;

namespace {

Matrix m1(double v) {
  Matrix m(1, 1);
  m << v;
  return m;
}

Matrix run_const(const Matrix& a, double t0, double t1, const IntegratorSettings& s) {
  const CoefficientFunction f = CoefficientFunction::constant(a);
  return integrate_matrix_ode(linear_rhs(f), Matrix::Identity(a.rows(), a.cols()), t0, t1, s,
                              f.bound(), {});
}

}  // namespace

TEST_CASE("default step sizing follows the coefficient bound") {
  IntegratorSettings s;
  CHECK(s.effective_step(1.0) == doctest::Approx(1e-3));
  CHECK(s.effective_step(0.0) == doctest::Approx(1e-3));
  CHECK(s.effective_step(1e6) == doctest::Approx(1e-5));  // clamped below
  CHECK(s.effective_step(1e-9) == doctest::Approx(1e-3));
  s.step = 0.02;
  CHECK(s.effective_step(50.0) == 0.02);  // explicit step wins
}

TEST_CASE("fixed-step integration converges at fourth order") {
  const Matrix a = m1(1.0);
  const double exact = std::exp(1.0);
  IntegratorSettings s;
  s.step = 0.1;
  const double e1 = std::abs(run_const(a, 0.0, 1.0, s)(0, 0) - exact);
  s.step = 0.05;
  const double e2 = std::abs(run_const(a, 0.0, 1.0, s)(0, 0) - exact);
  s.step = 0.025;
  const double e3 = std::abs(run_const(a, 0.0, 1.0, s)(0, 0) - exact);
  CHECK(e1 / e2 >= 12.0);  // ~16 for order 4
  CHECK(e2 / e3 >= 12.0);
  CHECK(e3 < 5e-8);
}

TEST_CASE("constant-coefficient propagation matches the matrix exponential") {
  Matrix a(2, 2);
  a << 0.3, 1.2, -0.7, -0.1;  // non-normal, complex spectrum
  const Matrix got = run_const(a, 0.0, 2.0, {});
  CHECK((got - expm(2.0 * a)).norm() < 1e-10);
}

TEST_CASE("steps align with breakpoints of discontinuous coefficients") {
  // Non-commuting pieces: exact answer is the ordered product of exponentials.
  Matrix a1(2, 2), a2(2, 2);
  a1 << 0.0, 1.0, 0.0, 0.0;
  a2 << 0.0, 0.0, 1.0, 0.0;
  const CoefficientFunction f = CoefficientFunction::piecewise({0.5}, {a1, a2});
  IntegratorSettings s;
  s.step = 0.3;  // would straddle t = 0.5 without alignment
  const Matrix got = integrate_matrix_ode(linear_rhs(f), Matrix::Identity(2, 2), 0.0, 1.0, s,
                                          f.bound(), f.breakpoints_within(0.0, 1.0));
  const Matrix exact = expm(0.5 * a2) * expm(0.5 * a1);
  CHECK((got - exact).norm() < 1e-12);  // constant pieces: only roundoff remains
}

TEST_CASE("adaptive integration agrees with the fixed-step result") {
  std::vector<TrigTerm> terms = {{0, 0, 1.0, 3.0, 0.0, true}};
  const CoefficientFunction f = CoefficientFunction::periodic(m1(-0.5), terms);
  IntegratorSettings fixed;
  const Matrix x_fixed = integrate_matrix_ode(linear_rhs(f), m1(1.0), 0.0, 5.0, fixed,
                                              f.bound(), {});
  IntegratorSettings ad;
  ad.method = Method::adaptive;
  ad.rtol = 1e-10;
  ad.atol = 1e-12;
  const Matrix x_ad = integrate_matrix_ode(linear_rhs(f), m1(1.0), 0.0, 5.0, ad, f.bound(), {});
  // Oracle: x(5) = exp(-0.5*5 + (1 - cos 15)/3).
  const double exact = std::exp(-2.5 + (1.0 - std::cos(15.0)) / 3.0);
  CHECK(std::abs(x_fixed(0, 0) - exact) < 1e-8);
  CHECK(std::abs(x_ad(0, 0) - exact) < 1e-8);
}

TEST_CASE("backward integration inverts the forward map") {
  Matrix a(2, 2);
  a << 0.2, 0.9, -0.4, -0.6;
  const Matrix fwd = run_const(a, 0.0, 1.5, {});
  const Matrix bwd = run_const(a, 1.5, 0.0, {});
  CHECK((bwd * fwd - Matrix::Identity(2, 2)).norm() < 1e-9);
  CHECK((bwd - expm(-1.5 * a)).norm() < 1e-10);
}

TEST_CASE("diverging states raise an overflow error with a time stamp") {
  IntegratorSettings s;
  s.step = 0.1;
  try {
    run_const(m1(1000.0), 0.0, 10.0, s);
    FAIL("expected OverflowError");
  } catch (const OverflowError& e) {
    CHECK(e.time > 0.0);
    CHECK(e.time <= 10.0);
    CHECK(e.code() == ErrorCode::numeric);
  }
}

TEST_CASE("adaptive step underflow raises a stiffness error") {
  IntegratorSettings s;
  s.method = Method::adaptive;
  s.rtol = 1e-16;
  s.atol = 1e-300;
  s.min_step = 1e-2;  // demanded accuracy needs far smaller steps
  CHECK_THROWS_AS(run_const(m1(1.0), 0.0, 1.0, s), StiffnessError);
}

TEST_CASE("segment knots split at interior breakpoints in travel order") {
  CHECK(segment_knots(0.0, 3.0, {1.0, 2.0}) == std::vector<double>{0.0, 1.0, 2.0, 3.0});
  CHECK(segment_knots(3.0, 0.0, {1.0, 2.0}) == std::vector<double>{3.0, 2.0, 1.0, 0.0});
  // Exterior breakpoints are ignored; near-duplicates merge.
  CHECK(segment_knots(0.0, 1.0, {-1.0, 5.0}) == std::vector<double>{0.0, 1.0});
  CHECK(segment_knots(0.0, 1.0, {1e-14}) == std::vector<double>{0.0, 1.0});
  const auto k = segment_knots(0.0, 1.0, {0.5, 0.5 + 1e-15});
  CHECK(k == std::vector<double>{0.0, 0.5, 1.0});
}

TEST_CASE("output paths visit requested times and reject non-monotone requests") {
  const CoefficientFunction f = CoefficientFunction::constant(m1(-1.0));
  const MatrixRhs rhs = linear_rhs(f);
  std::vector<double> seen_t;
  std::vector<double> seen_x;
  const std::vector<double> outs = {0.0, 0.5, 1.0};
  integrate_path(rhs, m1(2.0), 0.0, outs, {}, 1.0, {},
                 [&](size_t idx, double t, const Matrix& x) {
                   CHECK(idx == seen_t.size());
                   seen_t.push_back(t);
                   seen_x.push_back(x(0, 0));
                 });
  REQUIRE(seen_t.size() == 3);
  CHECK(seen_t == outs);
  CHECK(seen_x[0] == 2.0);  // output at t0 emits the initial state
  CHECK(seen_x[1] == doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-10));
  CHECK(seen_x[2] == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-10));

  const std::vector<double> bad = {0.5, 0.3};
  CHECK_THROWS_AS(integrate_path(rhs, m1(1.0), 0.0, bad, {}, 1.0, {},
                                 [](size_t, double, const Matrix&) {}),
                  InvalidArgumentError);
  // Travel direction comes from the last output; an earlier time on the
  // opposite side of the start is unreachable.
  const std::vector<double> before = {-0.5, 1.0};
  CHECK_THROWS_AS(integrate_path(rhs, m1(1.0), 0.0, before, {}, 1.0, {},
                                 [](size_t, double, const Matrix&) {}),
                  InvalidArgumentError);
}
