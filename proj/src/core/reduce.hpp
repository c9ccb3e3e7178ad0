#pragma once

#include <optional>

#include "integrate.hpp"
#include "system.hpp"

namespace ltvdet {

// Bounded change of variables z = S(t)^{-1} x taking x' = A(t) x to the
// block-diagonal z' = D(t) z, D = diag(D1, D2), sampled on a uniform grid.
struct ReductionResult {
  int n = 0;
  int k = 0;
  std::vector<double> grid;
  std::vector<Matrix> s, sinv, d;

  double sup_s = 0.0;
  double sup_sinv = 0.0;
  double sup_sdot = 0.0;
  std::vector<double> offdiag;    // |off-diagonal blocks of D(t)| before zeroing
  double max_offdiag = 0.0;       // max over the grid
  double max_identity_dev = 0.0;  // max ||S Sinv - I||

  // Triangular-route extras.
  double t_trunc = 0.0;
  double max_d1_dev = 0.0;  // max ||D1 - B11|| over the grid
  // Max ||S - S'|| when recomputed with a doubled truncation horizon; absent
  // when the coefficient domain already limits t_trunc.
  std::optional<double> trunc_sensitivity;

  CoefficientFunction s_fn() const;     // sampled S(t)
  CoefficientFunction sinv_fn() const;  // sampled S^{-1}(t)
  CoefficientFunction d_fn() const;     // sampled D(t)
};

struct ReduceSettings {
  double grid_dt = 0.0;  // 0 picks the integrator step
  IntegratorSettings integ;
};

// Symmetric route: T^2 = P X^T X P + (I-P) X^T X (I-P), T the SPD square
// root, S = X T^{-1}, from the fundamental solution X anchored at X(0) = I.
// Valid for any system with a dichotomy in normal form; conditioning-limited
// by the spread of X over the horizon.
ReductionResult coppel_transform(const LtvSystem& sys, const BlockPartition& part, double horizon,
                                 const ReduceSettings& settings = {});

// Triangular route for upper block-triangular A = [[B11, B12], [0, B22]]
// with B11 carrying the growth and B22 the decay: X12 is rebuilt from the
// truncated backward sweep X12' = B11 X12 + B12 X22, X12(t_trunc) = 0, then
//   S    = [[I, X12 N^{-1}], [0, X22 N^{-1}]],   N = (X12^T X12 + X22^T X22)^{1/2}
//   S^-1 = [[I, -X12 X22^{-1}], [0, N X22^{-1}]]
// which leaves D1 = B11 identically. t_trunc <= 0 picks
// horizon + 10 / alpha_hint clamped to the coefficient domain; doubling it
// must move S by <= 1e-6 (TruncationError otherwise).
ReductionResult triangular_reduction(const LtvSystem& sys, const BlockPartition& part,
                                     double horizon, double t_trunc = 0.0,
                                     double alpha_hint = 1.0,
                                     const ReduceSettings& settings = {});

}  // namespace ltvdet
