#pragma once

#include <span>
#include <vector>

namespace ltvdet {

// One measured point on a decay envelope: value = ||transition factor|| for a
// start t0 and a gap (elapsed time, always >= 0).
struct DecaySample {
  double t0 = 0.0;
  double gap = 0.0;
  double value = 0.0;
};

// Certified exponential envelope value <= kappa * exp(-alpha * gap).
//
// alpha is the largest rate for which the per-gap upper envelope
// V(gap) = max_t0 value stays below its smallest-gap anchor:
//   V(g) e^{alpha g} <= V(g_min) e^{alpha g_min} for every measured gap,
// located by coarse-to-fine grid refinement (resolution below 1e-5). This
// anchoring keeps kappa from absorbing growth: data that grows on average
// yields alpha <= 0 (reported raw) and an invalid fit. kappa is the smallest
// admissible constant, clamped to >= 1; residual is the worst
// value * e^{alpha gap} / kappa - 1 at the fitted pair.
struct EnvelopeFit {
  double alpha = 0.0;
  double kappa = 1.0;
  double residual = 0.0;
  bool valid = false;       // alpha > 0 and residual <= tol
  double raw_slope = 0.0;   // anchored slope bound; <= 0 when the data grows
  DecaySample worst;        // binding sample at the fitted envelope
  int sample_count = 0;
  int gap_count = 0;
};

EnvelopeFit fit_exponential_envelope(std::span<const DecaySample> samples, double tol,
                                     double alpha_cap);

}  // namespace ltvdet
