#pragma once

#include "dichotomy.hpp"
#include "envelope.hpp"
#include "integrate.hpp"
#include "system.hpp"

namespace ltvdet {

struct RiccatiOptions {
  Matrix qw;  // process weight, defaults to I
  Matrix rv;  // output weight, defaults to I
  Matrix p0;  // initial covariance, defaults to I
  double blowup = 1e8;  // DivergenceError when lambda_max(P) passes this
};

struct RiccatiSolution {
  std::vector<double> grid;
  std::vector<Matrix> p;
  Matrix qw, rv;
  double lambda_sup = 0.0;
  double lambda_inf = 0.0;
  // Earliest grid time from which ||P(t) - P(end)|| stays within
  // 1e-6 (1 + ||P(end)||); equals the final time when P never settles.
  double settle_time = 0.0;

  Matrix p_at(double t) const;  // linear interpolation on the grid
};

// Filter Riccati sweep P' = B1 P + P B1^T - P C1^T Rv^{-1} C1 P + Qw from
// P(0) = P0, symmetrized inside the dynamics. Throws DivergenceError when
// lambda_max(P) crosses the blowup threshold (the practical signature of a
// UCO failure in the driving pair).
RiccatiSolution solve_filter_riccati(const CoefficientFunction& b1, const CoefficientFunction& c1,
                                     const RiccatiOptions& options, double horizon,
                                     const IntegratorSettings& integ);

// L1(t) = P(t) C1(t)^T Rv^{-1} as a sampled coefficient on the Riccati grid.
CoefficientFunction riccati_gain(const RiccatiSolution& sol, const CoefficientFunction& c1);

// Structured full-state gain [L1; 0] (n x p) for the trailing-k partition.
CoefficientFunction structured_gain(const BlockPartition& part, const CoefficientFunction& l1);

// Certified decay of the error system x' = (A - L C) x:
//   ||Phi_e(t0 + gap, t0)|| <= kappa e^{-mu gap}.
// mu <= 0 is a verdict (valid = false), not an exception. Gaps shorter than
// 1 / bound(A - L C) are dropped as burn-in (unless that leaves fewer than
// two distinct gaps); grid.t0_min supplies the start-side burn-in.
struct DecayCertificate {
  double kappa = 1.0;
  double mu = 0.0;
  double residual = 0.0;
  bool valid = false;
  double raw_slope = 0.0;
  double gain_bound = 0.0;  // sup ||L||
  double burn_in = 0.0;     // gap threshold actually applied
  CertGrid grid;
  DecaySample worst;
  std::vector<DecaySample> samples;
};

DecayCertificate certify_error_decay(const LtvSystem& sys, const CoefficientFunction& l,
                                     double horizon, const CertGrid& grid, double tol,
                                     const IntegratorSettings& integ);

}  // namespace ltvdet
