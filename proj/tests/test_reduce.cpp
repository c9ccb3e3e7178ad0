#include <doctest.h>

#include <cmath>

#include "core/errors.hpp"
#include "core/reduce.hpp"
#include "core/sysfile.hpp"

using namespace ltvdet;

namespace {

LtvSystem example(const std::string& name) {
  return parse_system_json(bundled_example_json(name)).system;
}

}  // namespace

TEST_CASE("triangular reduction of the constant coupled system hits the closed form") {
  const LtvSystem sys = example("triu_constant");
  ReduceSettings rs;
  rs.grid_dt = 0.01;
  const ReductionResult red = triangular_reduction(sys, {2, 1}, 10.0, 0.0, 1.0, rs);

  CHECK(red.n == 2);
  CHECK(red.k == 1);
  CHECK(red.t_trunc == doctest::Approx(20.0));
  REQUIRE(red.grid.size() == red.s.size());

  // X12 = -e^{-t}/2 and X22 = e^{-t} give the t-independent transform
  // S = [[1, -1/sqrt(5)], [0, 2/sqrt(5)]].
  const double s12 = -1.0 / std::sqrt(5.0);
  const double s22 = 2.0 / std::sqrt(5.0);
  for (size_t i = 0; i < red.grid.size(); i += red.grid.size() / 7) {
    CHECK(red.s[i](0, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(red.s[i](0, 1) == doctest::Approx(s12).epsilon(1e-6));
    CHECK(red.s[i](1, 0) == 0.0);
    CHECK(red.s[i](1, 1) == doctest::Approx(s22).epsilon(1e-6));
    // S^{-1} = [[1, 1/2], [0, sqrt(5)/2]].
    CHECK(red.sinv[i](0, 1) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(red.sinv[i](1, 1) == doctest::Approx(std::sqrt(5.0) / 2.0).epsilon(1e-6));
  }

  CHECK(red.sup_s == doctest::Approx(1.2030).epsilon(1e-3));
  CHECK(red.sup_sinv == doctest::Approx(1.3454).epsilon(1e-3));
  CHECK(red.max_identity_dev < 1e-10);
  CHECK(red.max_d1_dev < 1e-7);    // D1 = B11 identically
  CHECK(red.max_offdiag < 1e-7);   // constant S: no finite-difference noise
  CHECK(red.sup_sdot < 1e-6);
  REQUIRE(red.trunc_sensitivity.has_value());
  CHECK(*red.trunc_sensitivity < 1e-6);

  // D2 equals B22 here: the normalizer shares the decay rate.
  for (size_t i = 0; i < red.grid.size(); i += red.grid.size() / 7)
    CHECK(red.d[i](1, 1) == doctest::Approx(-1.0).epsilon(1e-4));

  // Sampled-coefficient accessors reproduce the grid values.
  const CoefficientFunction s_fn = red.s_fn();
  CHECK((s_fn.eval(red.grid[5]) - red.s[5]).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("the reduction checks form, partition, horizon, and truncation inputs") {
  const LtvSystem tri = example("triu_constant");
  CHECK_THROWS_AS(triangular_reduction(example("rotated_saddle"), {2, 1}, 10.0), FormError);
  CHECK_THROWS_AS(triangular_reduction(tri, {3, 1}, 10.0), DimensionError);
  CHECK_THROWS_AS(triangular_reduction(tri, {2, 0}, 10.0), InvalidArgumentError);
  CHECK_THROWS_AS(triangular_reduction(tri, {2, 2}, 10.0), InvalidArgumentError);
  CHECK_THROWS_AS(triangular_reduction(tri, {2, 1}, -1.0), InvalidArgumentError);
  CHECK_THROWS_AS(triangular_reduction(tri, {2, 1}, 10.0, 5.0), InvalidArgumentError);
}

TEST_CASE("a bounded coefficient domain caps truncation and the sensitivity probe") {
  // Same constant dynamics, declared on a finite sample grid [0, 12].
  Matrix a(2, 2);
  a << 1.0, 1.0, 0.0, -1.0;
  const CoefficientFunction af = CoefficientFunction::sampled({0.0, 12.0}, {a, a});
  const LtvSystem sys(af, CoefficientFunction{});
  ReduceSettings rs;
  rs.grid_dt = 0.01;

  const ReductionResult red = triangular_reduction(sys, {2, 1}, 10.0, 0.0, 1.0, rs);
  CHECK(red.t_trunc == doctest::Approx(12.0));
  CHECK(!red.trunc_sensitivity.has_value());  // no room to double the sweep
  CHECK(red.max_d1_dev < 1e-6);

  CHECK_THROWS_AS(triangular_reduction(sys, {2, 1}, 20.0, 0.0, 1.0, rs), DomainError);
}

TEST_CASE("the symmetric route block-diagonalizes an axis-aligned system") {
  const LtvSystem sys = example("saddle_observed");
  ReduceSettings rs;
  rs.grid_dt = 0.01;
  const ReductionResult red = coppel_transform(sys, {2, 1}, 5.0, rs);
  // The fundamental solution is already split: S stays at the identity.
  CHECK(red.sup_s == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(red.sup_sinv == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(red.max_identity_dev < 1e-8);
  CHECK(red.max_offdiag < 1e-5);
  for (size_t i = 0; i < red.grid.size(); i += red.grid.size() / 5) {
    CHECK(red.d[i](0, 0) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(red.d[i](1, 1) == doctest::Approx(-1.0).epsilon(1e-5));
  }
  CHECK_THROWS_AS(coppel_transform(sys, {3, 1}, 5.0, rs), DimensionError);
  CHECK_THROWS_AS(coppel_transform(sys, {2, 1}, 0.0, rs), InvalidArgumentError);
}
