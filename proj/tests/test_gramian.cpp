#include <doctest.h>

#include <cmath>
#include <numbers>

#include "core/errors.hpp"
#include "core/gramian.hpp"
#include "core/sysfile.hpp"

using namespace ltvdet;

namespace {

LtvSystem example(const std::string& name) {
  return parse_system_json(bundled_example_json(name)).system;
}

LtvSystem scalar_stable() {
  return LtvSystem(CoefficientFunction::constant(-Matrix::Identity(1, 1)),
                   CoefficientFunction::constant(Matrix::Identity(1, 1)), "scalar");
}

}  // namespace

TEST_CASE("scalar Gramian matches the closed form") {
  // x' = -x, y = x: M(0, 1) = (1 - e^{-2}) / 2.
  const Matrix m = observability_gramian(scalar_stable(), 0.0, 1.0, {});
  CHECK(m(0, 0) == doctest::Approx((1.0 - std::exp(-2.0)) / 2.0).epsilon(1e-10));
}

TEST_CASE("saddle Gramian matches the per-coordinate closed form") {
  const Matrix m = observability_gramian(example("saddle_observed"), 0.0, 1.0, {});
  CHECK(m(0, 0) == doctest::Approx((std::exp(2.0) - 1.0) / 2.0).epsilon(1e-10));
  CHECK(std::abs(m(0, 1)) < 1e-12);
  CHECK(std::abs(m(1, 1)) < 1e-12);  // C = [1, 0] never sees x2
}

TEST_CASE("rotating output map accumulates an isotropic Gramian over a period") {
  std::vector<TrigTerm> terms = {{0, 0, 1.0, 1.0, 0.0, false}, {0, 1, 1.0, 1.0, 0.0, true}};
  const LtvSystem sys(CoefficientFunction::zero(2, 2),
                      CoefficientFunction::periodic(Matrix::Zero(1, 2), terms), "scan");
  const double pi = std::numbers::pi;
  const Matrix m = observability_gramian(sys, 0.3, 0.3 + 2.0 * pi, {});
  CHECK((m - pi * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("gramian windows are validated") {
  const LtvSystem sys = scalar_stable();
  CHECK_THROWS_AS(observability_gramian(sys, 1.0, 1.0, {}), InvalidArgumentError);
  CHECK_THROWS_AS(observability_gramian(sys, 2.0, 1.0, {}), InvalidArgumentError);

  const CoefficientFunction a = CoefficientFunction::sampled(
      {0.0, 2.0}, {-Matrix::Identity(1, 1), -Matrix::Identity(1, 1)});
  const LtvSystem bounded(a, CoefficientFunction::constant(Matrix::Identity(1, 1)));
  CHECK_THROWS_AS(observability_gramian(bounded, 0.0, 3.0, {}), DomainError);
}

TEST_CASE("UCO verdicts separate full-rank observation from hidden coordinates") {
  UcoSettings us;
  const auto starts = default_uco_starts(0.0, 10.0, 1.0, 8);

  // Coupled triangular system: x2 reaches the output through the coupling.
  const GramianReport seen = check_uco(example("triu_constant"), 1.0, starts, us);
  CHECK(seen.uco);
  CHECK(seen.beta1 > 1e-4);
  CHECK(seen.beta2 >= seen.beta1);
  CHECK(seen.gramians.size() == starts.size());
  CHECK(seen.beta1_threshold > 0.0);

  // C = [0, 1] with diagonal flow: the first coordinate is structurally
  // unobserved, so lambda_min vanishes identically.
  const GramianReport hidden = check_uco(example("saddle_hidden"), 1.0, starts, us);
  CHECK(!hidden.uco);
  CHECK(hidden.beta1 == 0.0);
  for (double lm : hidden.lambda_min) CHECK(lm == 0.0);
}

TEST_CASE("an identically zero output can never pass vacuously") {
  // Default threshold scales with boundC, but the floor keeps C = 0 failing.
  const LtvSystem blind(CoefficientFunction::constant(Matrix::Identity(1, 1)),
                        CoefficientFunction::constant(Matrix::Zero(1, 1)), "blind");
  const auto starts = default_uco_starts(0.0, 10.0, 1.0, 4);
  const GramianReport rep = check_uco(blind, 1.0, starts, {});
  CHECK(!rep.uco);
  CHECK(rep.beta1 == 0.0);
  CHECK(rep.beta1_threshold >= 1e-12);
}

TEST_CASE("UCO inputs are validated") {
  const LtvSystem sys = scalar_stable();
  const auto starts = default_uco_starts(0.0, 10.0, 1.0, 4);
  CHECK_THROWS_AS(check_uco(sys, -1.0, starts, {}), InvalidArgumentError);
  CHECK_THROWS_AS(check_uco(sys, 1.0, {}, {}), InvalidArgumentError);
}

TEST_CASE("zero injection leaves the closed-loop report identical") {
  const LtvSystem sys = example("triu_constant");
  const auto starts = default_uco_starts(0.0, 10.0, 1.0, 6);
  const auto [open, closed] =
      check_injection_invariance(sys, CoefficientFunction::zero(2, 1), 1.0, starts, {});
  CHECK(open.uco == closed.uco);
  CHECK(open.beta1 == doctest::Approx(closed.beta1).epsilon(1e-12));
  CHECK(open.beta2 == doctest::Approx(closed.beta2).epsilon(1e-12));
}

TEST_CASE("a large injection cannot flip the UCO verdict either way") {
  const auto starts = default_uco_starts(0.0, 10.0, 1.0, 6);
  Matrix l(2, 1);
  l << 2.0, -1.5;
  const CoefficientFunction gain = CoefficientFunction::constant(l);

  // UCO pair stays UCO under A -> A - L C.
  const auto [open_t, closed_t] =
      check_injection_invariance(example("rotation"), gain, 1.0, starts, {});
  CHECK(open_t.uco);
  CHECK(closed_t.uco);

  // A structurally hidden coordinate stays hidden: L C cannot reach it.
  const auto [open_f, closed_f] =
      check_injection_invariance(example("saddle_observed"), gain, 1.0, starts, {});
  CHECK(!open_f.uco);
  CHECK(!closed_f.uco);
}

TEST_CASE("injection gains must be n x p") {
  const LtvSystem sys = example("saddle_observed");
  const auto starts = default_uco_starts(0.0, 10.0, 1.0, 4);
  CHECK_THROWS_AS(check_injection_invariance(sys, CoefficientFunction::zero(1, 1), 1.0,
                                             starts, {}),
                  DimensionError);
}

TEST_CASE("default window starts cover the horizon evenly") {
  const auto starts = default_uco_starts(0.0, 10.0, 2.0, 5);
  REQUIRE(starts.size() == 5);
  CHECK(starts.front() == 0.0);
  CHECK(starts.back() == doctest::Approx(8.0));
  for (size_t i = 1; i < starts.size(); ++i)
    CHECK(starts[i] - starts[i - 1] == doctest::Approx(2.0));

  CHECK_THROWS_AS(default_uco_starts(0.0, 10.0, -1.0, 4), InvalidArgumentError);
  CHECK_THROWS_AS(default_uco_starts(0.0, 1.0, 5.0, 4), InvalidArgumentError);
  // A window exactly filling the horizon yields the single start.
  const auto one = default_uco_starts(0.0, 2.0, 2.0, 4);
  REQUIRE(!one.empty());
  CHECK(one.front() == 0.0);
}
