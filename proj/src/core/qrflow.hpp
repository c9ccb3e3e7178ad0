#pragma once

#include "integrate.hpp"
#include "system.hpp"

namespace ltvdet {

struct QrFlowSettings {
  IntegratorSettings integ;
  int reorth_interval = 100;        // steps between forced re-orthonormalizations
  double drift_tol = 1e-9;          // ||Q^T Q - I||_F trigger for an extra one
  double max_reorth_change = 1e-3;  // FlowError when a correction moves Q more
  int record_stride = 1;            // keep every record_stride-th step
};

// Orthogonal flow Q(t) with X(t) = Q(t) R(t): Q' = Q S(A, Q) plus the
// log-diagonal nu_i(t) = log R_ii(t) integrated alongside. B = Q^T A Q - S is
// upper triangular with diag(B) = nu'.
struct QrFlowResult {
  std::vector<double> grid;
  std::vector<Matrix> q;
  std::vector<Matrix> b;   // strictly lower part zeroed; see max_lower_residual
  std::vector<Vector> nu;
  std::vector<double> ortho_residual;  // ||Q^T Q - I||_F at each grid point
  double max_ortho_residual = 0.0;
  double max_lower_residual = 0.0;  // |strictly lower B| before zeroing
  int reorth_count = 0;

  Vector nu_at(double t) const;  // linear interpolation on the grid
  Matrix q_at(double t) const;   // linear interpolation (approximately orthogonal)
};

// Skew generator of the flow: s_ij = q_i^T A q_j for i > j, s_ji = -s_ij,
// zero diagonal.
Matrix skew_generator(const Matrix& a, const Matrix& q);

// Runs the flow from X(t_begin) = x0 (nonsingular) to t_end. x0 is QR-factored
// with positive diag(R); re-orthonormalization (modified Gram-Schmidt, applied
// every reorth_interval steps or on drift) folds its log-diagonal into nu.
QrFlowResult run_qr_flow(const LtvSystem& sys, const Matrix& x0, double t_begin, double t_end,
                         const QrFlowSettings& settings = {});

// The flow-transformed system z' = B(t) z, y = C(t) Q(t) z as sampled-grid
// coefficients over the flow grid.
LtvSystem triangularized_system(const LtvSystem& sys, const QrFlowResult& flow);

}  // namespace ltvdet
