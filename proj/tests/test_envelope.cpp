#include <doctest.h>

#include <cmath>
#include <vector>

#include "core/envelope.hpp"
#include "core/errors.hpp"

using namespace ltvdet;

namespace {

std::vector<DecaySample> exact_decay(double kappa, double alpha,
                                     const std::vector<double>& gaps) {
  std::vector<DecaySample> s;
  for (double t0 : {0.0, 1.0, 2.0})
    for (double g : gaps) s.push_back({t0, g, kappa * std::exp(-alpha * g)});
  return s;
}

}  // namespace

TEST_CASE("exact exponential data recovers rate and constant") {
  const auto samples = exact_decay(3.0, 2.0, {0.5, 1.0, 2.0, 4.0});
  const EnvelopeFit fit = fit_exponential_envelope(samples, 1e-3, 5.0);
  CHECK(fit.valid);
  CHECK(fit.alpha == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(fit.kappa == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(fit.residual <= 1e-3);
  CHECK(fit.raw_slope == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(fit.sample_count == 12);
  CHECK(fit.gap_count == 4);
}

TEST_CASE("growing data is an invalid fit, not an exception") {
  std::vector<DecaySample> samples;
  for (double g : {0.5, 1.0, 2.0, 4.0}) samples.push_back({0.0, g, std::exp(0.5 * g)});
  const EnvelopeFit fit = fit_exponential_envelope(samples, 1e-3, 5.0);
  CHECK(!fit.valid);
  CHECK(fit.raw_slope <= 0.0);
  CHECK(fit.alpha <= 0.0);
}

TEST_CASE("kappa is clamped to at least one") {
  const auto samples = exact_decay(0.5, 1.0, {0.5, 1.0, 2.0});
  const EnvelopeFit fit = fit_exponential_envelope(samples, 1e-3, 5.0);
  CHECK(fit.valid);
  CHECK(fit.kappa == 1.0);
  CHECK(fit.alpha == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("the rate cap binds fast decay") {
  const auto samples = exact_decay(1.0, 3.0, {0.5, 1.0, 2.0});
  const EnvelopeFit fit = fit_exponential_envelope(samples, 1e-3, 2.0);
  CHECK(fit.valid);
  CHECK(fit.alpha <= 2.0 + 1e-9);
  CHECK(fit.alpha == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("the envelope anchors at the smallest gap") {
  // A hump at a middle gap must lower alpha rather than inflate kappa.
  std::vector<DecaySample> samples = {
      {0.0, 0.5, std::exp(-0.5)}, {0.0, 1.0, std::exp(-0.25)}, {0.0, 2.0, std::exp(-2.0)}};
  const EnvelopeFit fit = fit_exponential_envelope(samples, 1e-3, 5.0);
  // Anchor V(0.5) e^{0.5 alpha}; the g=1 sample forces
  // alpha <= (log V(0.5) - log V(1.0)) / 0.5 = -0.5.
  CHECK(!fit.valid);
  CHECK(fit.raw_slope <= 0.0);
}

TEST_CASE("degenerate sample sets are rejected") {
  std::vector<DecaySample> one_gap = {{0.0, 1.0, 0.5}, {1.0, 1.0, 0.4}};
  CHECK_THROWS_AS(fit_exponential_envelope(one_gap, 1e-3, 5.0), InvalidArgumentError);
  std::vector<DecaySample> neg_gap = {{0.0, -1.0, 0.5}, {0.0, 1.0, 0.4}};
  CHECK_THROWS_AS(fit_exponential_envelope(neg_gap, 1e-3, 5.0), InvalidArgumentError);
  std::vector<DecaySample> non_finite = {{0.0, 1.0, std::nan("")}, {0.0, 2.0, 0.4}};
  CHECK_THROWS_AS(fit_exponential_envelope(non_finite, 1e-3, 5.0), InvalidArgumentError);
  std::vector<DecaySample> ok = {{0.0, 1.0, 0.5}, {0.0, 2.0, 0.25}};
  CHECK_THROWS_AS(fit_exponential_envelope(ok, 1e-3, 0.0), InvalidArgumentError);
}
