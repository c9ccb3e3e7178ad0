#include <doctest.h>

#include <cmath>
#include <limits>

#include "core/coefficient.hpp"
#include "core/errors.hpp"

using namespace ltvdet;

namespace {

Matrix m1(double v) {
  Matrix m(1, 1);
  m << v;
  return m;
}

}  // namespace

TEST_CASE("constant coefficient evaluates everywhere with an exact bound") {
  Matrix v(2, 2);
  v << 1.0, 2.0, 0.0, -1.0;
  const CoefficientFunction f = CoefficientFunction::constant(v);
  CHECK(f.rows() == 2);
  CHECK(f.cols() == 2);
  CHECK(f.kind() == "constant");
  CHECK((f.eval(-100.0) - v).norm() == 0.0);
  CHECK((f.eval(3.5, Side::left) - v).norm() == 0.0);
  CHECK(f.bound() == doctest::Approx(spectral_norm(v)).epsilon(1e-12));
  CHECK(f.domain_begin() == -std::numeric_limits<double>::infinity());
  CHECK(f.domain_end() == std::numeric_limits<double>::infinity());
  CHECK(f.breakpoints_within(-10.0, 10.0).empty());
}

TEST_CASE("periodic coefficient matches its trigonometric formula") {
  Matrix offset(1, 2);
  offset << 0.5, 0.0;
  std::vector<TrigTerm> terms;
  terms.push_back({0, 0, 0.3, 2.0, 0.1, true});    // 0.3 sin(2t + 0.1)
  terms.push_back({0, 1, -1.5, 0.5, 0.0, false});  // -1.5 cos(0.5 t)
  const CoefficientFunction f = CoefficientFunction::periodic(offset, terms);
  CHECK(f.kind() == "periodic");
  double sup = 0.0;
  for (double t : {-2.0, 0.0, 0.4, 1.7, 31.0}) {
    Matrix want(1, 2);
    want << 0.5 + 0.3 * std::sin(2.0 * t + 0.1), -1.5 * std::cos(0.5 * t);
    CHECK((f.eval(t) - want).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((f.eval(t, Side::left) - f.eval(t, Side::right)).norm() == 0.0);
    sup = std::max(sup, spectral_norm(f.eval(t)));
  }
  CHECK(f.bound() >= sup);
  CHECK(f.breakpoints_within(0.0, 100.0).empty());

  CHECK_THROWS_AS(CoefficientFunction::periodic(offset, {{2, 0, 1.0, 1.0, 0.0, true}}),
                  DimensionError);
}

TEST_CASE("piecewise coefficient takes one-sided limits at breakpoints") {
  const CoefficientFunction f =
      CoefficientFunction::piecewise({1.0, 2.0}, {m1(10.0), m1(20.0), m1(30.0)});
  CHECK(f.kind() == "piecewise");
  CHECK(f.eval(0.5)(0, 0) == 10.0);
  CHECK(f.eval(1.0, Side::right)(0, 0) == 20.0);
  CHECK(f.eval(1.0, Side::left)(0, 0) == 10.0);
  CHECK(f.eval(2.0, Side::right)(0, 0) == 30.0);
  CHECK(f.eval(2.0, Side::left)(0, 0) == 20.0);
  CHECK(f.eval(5.0)(0, 0) == 30.0);
  CHECK(f.bound() == doctest::Approx(30.0));

  const auto bp = f.breakpoints_within(0.0, 3.0);
  REQUIRE(bp.size() == 2);
  CHECK(bp[0] == 1.0);
  CHECK(bp[1] == 2.0);
  CHECK(f.breakpoints_within(1.5, 3.0) == std::vector<double>{2.0});
  CHECK(f.breakpoints_within(1.0, 2.0).empty());  // open interval

  CHECK_THROWS_AS(CoefficientFunction::piecewise({}, {}), InvalidArgumentError);
  CHECK_THROWS_AS(CoefficientFunction::piecewise({1.0}, {m1(1.0)}), DimensionError);
  CHECK_THROWS_AS(CoefficientFunction::piecewise({2.0, 1.0}, {m1(1.0), m1(2.0), m1(3.0)}),
                  InvalidArgumentError);
  CHECK_THROWS_AS(
      CoefficientFunction::piecewise({1.0}, {m1(1.0), Matrix::Zero(2, 2)}),
      DimensionError);
}

TEST_CASE("sampled coefficient interpolates linearly on a bounded domain") {
  const CoefficientFunction f =
      CoefficientFunction::sampled({0.0, 1.0, 2.0}, {m1(0.0), m1(2.0), m1(2.0)});
  CHECK(f.kind() == "sampled");
  CHECK(f.eval(0.5)(0, 0) == doctest::Approx(1.0));
  CHECK(f.eval(1.0)(0, 0) == 2.0);
  CHECK(f.eval(1.75)(0, 0) == doctest::Approx(2.0));
  CHECK(f.domain_begin() == 0.0);
  CHECK(f.domain_end() == 2.0);
  CHECK(f.eval(2.0)(0, 0) == 2.0);  // endpoint included
  CHECK_THROWS_AS(f.eval(2.5), DomainError);
  CHECK_THROWS_AS(f.eval(-0.5), DomainError);

  // Interior sample times are interpolation kinks.
  CHECK(f.breakpoints_within(0.0, 2.0) == std::vector<double>{1.0});

  CHECK_THROWS_AS(CoefficientFunction::sampled({0.0}, {m1(1.0)}), InvalidArgumentError);
  CHECK_THROWS_AS(CoefficientFunction::sampled({0.0, 0.0}, {m1(1.0), m1(2.0)}),
                  InvalidArgumentError);
  CHECK_THROWS_AS(CoefficientFunction::sampled({0.0, 1.0}, {m1(1.0)}), DimensionError);
  CHECK_THROWS_AS(
      CoefficientFunction::sampled({0.0, 1.0}, {m1(1.0), Matrix::Zero(2, 1)}),
      DimensionError);
}

TEST_CASE("zero and identity coefficients") {
  const CoefficientFunction z = CoefficientFunction::zero(2, 3);
  CHECK(z.rows() == 2);
  CHECK(z.cols() == 3);
  CHECK(z.eval(7.0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(z.bound() == 0.0);
  const CoefficientFunction id = CoefficientFunction::identity(3);
  CHECK((id.eval(-1.0) - Matrix::Identity(3, 3)).norm() == 0.0);
}

TEST_CASE("block assembly places pieces and leaves uncovered entries exactly zero") {
  const CoefficientFunction f = CoefficientFunction::blocks(
      2, 2,
      {{0, 0, CoefficientFunction::constant(m1(3.0))},
       {1, 1, CoefficientFunction::periodic(m1(0.0), {{0, 0, 1.0, 1.0, 0.0, true}})}});
  const Matrix at = f.eval(0.7);
  CHECK(at(0, 0) == 3.0);
  CHECK(at(0, 1) == 0.0);
  CHECK(at(1, 0) == 0.0);
  CHECK(at(1, 1) == doctest::Approx(std::sin(0.7)).epsilon(1e-14));
  CHECK(f.kind() == "composed");

  CHECK_THROWS_AS(CoefficientFunction::blocks(
                      1, 1, {{0, 0, CoefficientFunction::constant(Matrix::Zero(2, 2))}}),
                  DimensionError);
  CHECK_THROWS_AS(CoefficientFunction::blocks(2, 2, {{0, 0, CoefficientFunction{}}}),
                  InvalidArgumentError);
}

TEST_CASE("block slicing reads a window of the source") {
  Matrix v(2, 3);
  v << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
  const CoefficientFunction f = CoefficientFunction::constant(v);
  const CoefficientFunction s = f.block(0, 1, 2, 2);
  Matrix want(2, 2);
  want << 2.0, 3.0, 5.0, 6.0;
  CHECK((s.eval(0.0) - want).norm() == 0.0);
  CHECK_THROWS_AS(f.block(1, 0, 2, 2), DimensionError);
  CHECK_THROWS_AS(CoefficientFunction{}.block(0, 0, 1, 1), InvalidArgumentError);
}

TEST_CASE("products and differences compose evaluation, domains, and breakpoints") {
  const CoefficientFunction pw =
      CoefficientFunction::piecewise({1.0}, {m1(2.0), m1(5.0)});
  const CoefficientFunction sm =
      CoefficientFunction::sampled({0.0, 1.5, 3.0}, {m1(1.0), m1(4.0), m1(4.0)});

  const CoefficientFunction prod = pw * sm;
  CHECK(prod.kind() == "composed");
  CHECK(prod.eval(0.5)(0, 0) == doctest::Approx(2.0 * 2.0));  // sm(0.5) = 2
  CHECK(prod.eval(2.0)(0, 0) == doctest::Approx(5.0 * 4.0));
  // Domain intersects; breakpoints union.
  CHECK(prod.domain_begin() == 0.0);
  CHECK(prod.domain_end() == 3.0);
  const auto bp = prod.breakpoints_within(0.0, 3.0);
  REQUIRE(bp.size() == 2);
  CHECK(bp[0] == 1.0);
  CHECK(bp[1] == 1.5);
  CHECK(prod.bound() <= pw.bound() * sm.bound() + 1e-12);

  const CoefficientFunction diff = pw - sm;
  CHECK(diff.eval(0.5)(0, 0) == doctest::Approx(0.0));
  CHECK(diff.eval(2.0)(0, 0) == doctest::Approx(1.0));

  CHECK_THROWS_AS(CoefficientFunction::constant(Matrix::Zero(1, 2)) *
                      CoefficientFunction::constant(Matrix::Zero(1, 2)),
                  DimensionError);
  CHECK_THROWS_AS(CoefficientFunction::constant(Matrix::Zero(1, 2)) -
                      CoefficientFunction::constant(Matrix::Zero(2, 1)),
                  DimensionError);
  CHECK_THROWS_AS(pw * CoefficientFunction{}, InvalidArgumentError);
  CHECK_THROWS_AS(pw - CoefficientFunction{}, InvalidArgumentError);
}

TEST_CASE("empty coefficient guards") {
  const CoefficientFunction f;
  CHECK(!f.valid());
  CHECK_THROWS_AS(f.eval(0.0), InvalidArgumentError);
}
