#pragma once

#include <optional>

#include "envelope.hpp"
#include "qrflow.hpp"
#include "system.hpp"
#include "transition.hpp"

namespace ltvdet {

enum class ExponentClass { stable, unstable, marginal };

struct ExponentSettings {
  double window = 10.0;    // Steklov averaging window H
  double gap_delta = 0.0;  // classification margin; 0 picks 0.05 * boundA
  int t0_samples = 200;
};

// Windowed growth rates lambda_i(t0) = (nu_i(t0+H) - nu_i(t0)) / H of the
// flow's log-diagonal, classified against a symmetric margin about zero.
struct ExponentEstimate {
  double window = 0.0;
  double gap_delta = 0.0;
  Vector lambda_sup, lambda_inf;  // per-coordinate extremes over t0
  std::vector<ExponentClass> classes;
  bool ordered = false;  // stable coordinates are exactly the trailing block
  std::optional<int> proposed_k;
  bool has_marginal = false;
  std::string marginal_detail;
};

// No-throw workhorse; classes may contain marginal entries.
ExponentEstimate estimate_exponent_data(const QrFlowResult& flow, const ExponentSettings& settings,
                                        double bound_a);

// Throws NoGapError when any coordinate is marginal (its rate range straddles
// the margin), naming the coordinate and range.
ExponentEstimate estimate_exponents(const QrFlowResult& flow, const ExponentSettings& settings,
                                    double bound_a);

struct CertGrid {
  int t0_count = 20;
  std::vector<double> gaps = {0.5, 1.0, 2.0, 5.0, 10.0};
  double t0_min = 0.0;  // burn-in: earliest admissible start
};

// Certified exponential dichotomy with projector rank k in normal form
// P = diag(0, I_k):
//   ||Phi(t, t0) Pi(t0)||       <= kappa e^{-alpha (t - t0)}, t >= t0
//   ||Phi(t, t0) (I - Pi(t0))|| <= kappa e^{ alpha (t - t0)}, t <= t0
// where Pi(t0) is the dichotomy projector expressed at time t0.
struct DichotomyCertificate {
  int n = 0;
  int k = 0;
  double kappa = 1.0;
  double alpha = 0.0;
  double stable_residual = 0.0;
  double unstable_residual = 0.0;
  double stable_alpha = 0.0;    // per-side fitted rates
  double unstable_alpha = 0.0;
  CertGrid grid;
  double horizon = 0.0;
  double tol = 0.0;
  // "normal-form" (diagonal blocks), "sylvester" (coupled triangular, Pi from
  // the decoupling sweep), or "anchored" (dense A, Pi conjugated through
  // Phi(t0, 0); conditioning-limited).
  std::string projector_route;
  std::vector<DecaySample> stable_samples, unstable_samples;

  Matrix projector() const;  // diag(0, I_k)
};

// Throws CertificationError (worst pair quoted) when no valid envelope with
// alpha > 0 exists at the given tolerance.
DichotomyCertificate certify_dichotomy(const LtvSystem& sys, int k, double horizon,
                                       const CertGrid& grid, double tol,
                                       const IntegratorSettings& integ);

}  // namespace ltvdet
