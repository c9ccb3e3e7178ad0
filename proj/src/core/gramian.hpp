#pragma once

#include <span>

#include "integrate.hpp"
#include "system.hpp"

namespace ltvdet {

// Observability Gramian M(t1, t0) = int_{t0}^{t1} Phi^T C^T C Phi ds, by a
// composite-Simpson sweep on the RK4 propagation grid (steps aligned to
// coefficient breakpoints, an even step count per smooth segment).
Matrix observability_gramian(const LtvSystem& sys, double t0, double t1,
                             const IntegratorSettings& integ);

struct UcoSettings {
  // Verdict threshold on beta1. Negative picks the default
  // 1e-6 * sigma * boundC^2, floored at 1e-12 * max(1, sigma) so an
  // identically-zero output can never pass vacuously.
  double beta1_threshold = -1.0;
  IntegratorSettings integ;
};

struct GramianReport {
  double sigma = 0.0;
  double beta1_threshold = 0.0;
  std::vector<double> starts;
  std::vector<Matrix> gramians;     // one per start
  std::vector<double> lambda_min;   // clipped at 0 (PSD up to -1e-10)
  std::vector<double> lambda_max;
  double beta1 = 0.0;  // min over starts of lambda_min
  double beta2 = 0.0;  // max over starts of lambda_max
  bool uco = false;    // beta1 >= beta1_threshold
};

// Uniform complete observability probe over the given window starts.
GramianReport check_uco(const LtvSystem& sys, double sigma, std::span<const double> starts,
                        const UcoSettings& settings = {});

// Output-injection invariance probe: the same UCO check on (A, C) and on
// (A - L C, C). The two verdicts agree for any bounded L.
std::pair<GramianReport, GramianReport> check_injection_invariance(
    const LtvSystem& sys, const CoefficientFunction& l, double sigma,
    std::span<const double> starts, const UcoSettings& settings = {});

// Evenly spaced window starts covering [t_begin, t_end - sigma].
std::vector<double> default_uco_starts(double t_begin, double t_end, double sigma, int count = 32);

}  // namespace ltvdet
