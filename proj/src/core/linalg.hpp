#pragma once

#include <Eigen/Dense>

#include "errors.hpp"

namespace ltvdet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Spectral norm (largest singular value).
inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.jacobiSvd().singularValues()(0);
}

// Symmetric positive semidefinite square root. Eigenvalues below
// rel_floor * lambda_max are clamped to zero.
inline Matrix spd_sqrt(const Matrix& m, double rel_floor = 0.0) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  Vector lam = es.eigenvalues();
  const double floor = rel_floor * lam.cwiseAbs().maxCoeff();
  for (int i = 0; i < lam.size(); ++i) lam(i) = lam(i) > floor ? std::sqrt(lam(i)) : 0.0;
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

inline double cond_2norm(const Matrix& m) {
  auto sv = m.jacobiSvd().singularValues();
  const double smin = sv(sv.size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

// Solve M X = I with a condition cap. Throws ConditioningError above the cap.
inline Matrix checked_inverse(const Matrix& m, double cond_cap, const char* what) {
  const double c = cond_2norm(m);
  if (!(c <= cond_cap))
    throw ConditioningError(std::string(what) + ": condition number " + std::to_string(c) +
                            " exceeds cap " + std::to_string(cond_cap));
  return m.partialPivLu().solve(Matrix::Identity(m.rows(), m.cols()));
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace ltvdet
