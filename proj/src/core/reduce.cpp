#include "reduce.hpp"

#include <cmath>

#include "errors.hpp"
#include "transition.hpp"

namespace ltvdet {

CoefficientFunction ReductionResult::s_fn() const { return CoefficientFunction::sampled(grid, s); }
CoefficientFunction ReductionResult::sinv_fn() const {
  return CoefficientFunction::sampled(grid, sinv);
}
CoefficientFunction ReductionResult::d_fn() const { return CoefficientFunction::sampled(grid, d); }

namespace {

std::vector<double> uniform_grid(double horizon, double dt) {
  const int m = std::max(2, static_cast<int>(std::round(horizon / dt)));
  std::vector<double> grid(static_cast<size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) grid[static_cast<size_t>(i)] = horizon * i / m;
  return grid;
}

// Second-order finite differences on a uniform grid.
Matrix fd_derivative(const std::vector<Matrix>& v, size_t i, double dt) {
  const size_t m = v.size() - 1;
  if (i == 0) return (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt);
  if (i == m) return (3.0 * v[m] - 4.0 * v[m - 1] + v[m - 2]) / (2.0 * dt);
  return (v[i + 1] - v[i - 1]) / (2.0 * dt);
}

// D = Sinv (A S - S'), recording off-diagonal magnitude before zeroing.
void assemble_d(ReductionResult& res, const LtvSystem& sys, double dt) {
  const int n1 = res.n - res.k, n2 = res.k;
  res.d.resize(res.grid.size());
  res.offdiag.assign(res.grid.size(), 0.0);
  for (size_t i = 0; i < res.grid.size(); ++i) {
    const Matrix sdot = fd_derivative(res.s, i, dt);
    res.sup_sdot = std::max(res.sup_sdot, spectral_norm(sdot));
    Matrix d = res.sinv[i] * (sys.a().eval(res.grid[i]) * res.s[i] - sdot);
    if (n1 > 0 && n2 > 0) {
      res.offdiag[i] = std::max(d.topRightCorner(n1, n2).cwiseAbs().maxCoeff(),
                                d.bottomLeftCorner(n2, n1).cwiseAbs().maxCoeff());
      res.max_offdiag = std::max(res.max_offdiag, res.offdiag[i]);
      d.topRightCorner(n1, n2).setZero();
      d.bottomLeftCorner(n2, n1).setZero();
    }
    res.d[i] = std::move(d);
  }
}

void record_bounds(ReductionResult& res) {
  for (size_t i = 0; i < res.grid.size(); ++i) {
    res.sup_s = std::max(res.sup_s, spectral_norm(res.s[i]));
    res.sup_sinv = std::max(res.sup_sinv, spectral_norm(res.sinv[i]));
    res.max_identity_dev =
        std::max(res.max_identity_dev,
                 (res.s[i] * res.sinv[i] - Matrix::Identity(res.n, res.n)).norm());
  }
}

// Backward sweep of the stacked pair (X12; X22) from (0; X22(t_trunc)) down
// to 0, recorded on the grid. Keeping the pair coupled preserves the
// integrator order; X12 stays bounded whenever B22 decays at least as fast as
// B11 grows.
void sweep_x12_x22(const LtvSystem& sys, int n1, int n2, double t_trunc,
                   const std::vector<double>& grid, const IntegratorSettings& integ,
                   std::vector<Matrix>& x12, std::vector<Matrix>& x22) {
  const auto b11 = sys.a().block(0, 0, n1, n1);
  const auto b12 = sys.a().block(0, n1, n1, n2);
  const auto b22 = sys.a().block(n1, n1, n2, n2);

  LtvSystem tail(b22, CoefficientFunction(), "");
  const Matrix x22_end = propagate(tail, Matrix::Identity(n2, n2), 0.0, t_trunc, integ);

  MatrixRhs rhs = [b11, b12, b22, n1, n2](double t, const Matrix& z, Side side) -> Matrix {
    const Matrix zx12 = z.topRows(n1), zx22 = z.bottomRows(n2);
    Matrix dz(n1 + n2, n2);
    const Matrix b12v = b12.eval(t, side), b22v = b22.eval(t, side);
    dz.topRows(n1) = b11.eval(t, side) * zx12 + b12v * zx22;
    dz.bottomRows(n2) = b22v * zx22;
    return dz;
  };

  Matrix z0 = Matrix::Zero(n1 + n2, n2);
  z0.bottomRows(n2) = x22_end;

  x12.assign(grid.size(), Matrix());
  x22.assign(grid.size(), Matrix());
  std::vector<double> outputs(grid.rbegin(), grid.rend());
  const auto breaks = sys.a().breakpoints_within(0.0, t_trunc);
  integrate_path(rhs, z0, t_trunc, outputs, integ, 2.0 * sys.bound_a(), breaks,
                 [&](size_t i, double, const Matrix& z) {
                   const size_t gi = grid.size() - 1 - i;
                   x12[gi] = z.topRows(n1);
                   x22[gi] = z.bottomRows(n2);
                 });
}

}  // namespace

ReductionResult coppel_transform(const LtvSystem& sys, const BlockPartition& part, double horizon,
                                 const ReduceSettings& settings) {
  part.validate();
  if (part.n != sys.n()) throw DimensionError("partition does not match the system dimension");
  if (!(horizon > 0.0)) throw InvalidArgumentError("reduction horizon must be positive");

  ReductionResult res;
  res.n = part.n;
  res.k = part.k;
  const double dt = settings.grid_dt > 0.0 ? settings.grid_dt
                                           : settings.integ.effective_step(sys.bound_a());
  res.grid = uniform_grid(horizon, dt);
  const double dt_actual = res.grid[1] - res.grid[0];

  const Matrix p = part.projector();
  const Matrix q = Matrix::Identity(res.n, res.n) - p;

  std::vector<Matrix> x(res.grid.size());
  {
    LtvSystem plain(sys.a(), CoefficientFunction(), "");
    propagate_path(plain, Matrix::Identity(res.n, res.n), 0.0, res.grid, settings.integ,
                   [&](size_t i, double, const Matrix& xi) { x[i] = xi; });
  }

  res.s.resize(res.grid.size());
  res.sinv.resize(res.grid.size());
  for (size_t i = 0; i < res.grid.size(); ++i) {
    const Matrix gram = x[i].transpose() * x[i];
    const Matrix t2 = p * gram * p + q * gram * q;
    Eigen::SelfAdjointEigenSolver<Matrix> es(t2);
    if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
    const Vector lam = es.eigenvalues();
    if (!(lam.minCoeff() > 1e-12 * std::max(lam.maxCoeff(), 1e-300)))
      throw ConditioningError("normalizer T is singular to working precision at t=" +
                              std::to_string(res.grid[i]));
    const Vector sq = lam.cwiseSqrt();
    const Matrix tmat = es.eigenvectors() * sq.asDiagonal() * es.eigenvectors().transpose();
    const Matrix tinv = es.eigenvectors() * sq.cwiseInverse().asDiagonal() *
                        es.eigenvectors().transpose();
    res.s[i] = x[i] * tinv;
    res.sinv[i] = tmat * x[i].partialPivLu().solve(Matrix::Identity(res.n, res.n));
  }
  record_bounds(res);
  assemble_d(res, sys, dt_actual);
  return res;
}

ReductionResult triangular_reduction(const LtvSystem& sys, const BlockPartition& part,
                                     double horizon, double t_trunc, double alpha_hint,
                                     const ReduceSettings& settings) {
  part.validate();
  if (part.n != sys.n()) throw DimensionError("partition does not match the system dimension");
  if (part.k == 0 || part.k == part.n)
    throw InvalidArgumentError("triangular reduction needs both blocks nontrivial");
  if (!(horizon > 0.0)) throw InvalidArgumentError("reduction horizon must be positive");
  const int n1 = part.n1(), n2 = part.n2();

  const double struct_tol = 1e-9 * std::max(1.0, sys.bound_a());
  if (lower_block_magnitude(sys, part.k, 0.0, horizon) > struct_tol)
    throw FormError("system is not upper block-triangular for the given partition");

  const double domain_end = sys.a().domain_end();
  if (horizon > domain_end + 1e-9 * (1.0 + horizon))
    throw DomainError("reduction horizon exceeds the coefficient domain");

  ReductionResult res;
  res.n = part.n;
  res.k = part.k;
  if (t_trunc <= 0.0) {
    const double rate = alpha_hint > 0.0 ? alpha_hint : 1.0;
    t_trunc = horizon + 10.0 / rate;
  }
  t_trunc = std::min(t_trunc, domain_end);
  if (!(t_trunc >= horizon))
    throw InvalidArgumentError("truncation horizon must reach past the reduction horizon");
  res.t_trunc = t_trunc;

  const double dt = settings.grid_dt > 0.0 ? settings.grid_dt
                                           : settings.integ.effective_step(sys.bound_a());
  res.grid = uniform_grid(horizon, dt);
  const double dt_actual = res.grid[1] - res.grid[0];

  std::vector<Matrix> x12, x22;
  sweep_x12_x22(sys, n1, n2, t_trunc, res.grid, settings.integ, x12, x22);

  auto build_s = [&](const std::vector<Matrix>& x12v, const std::vector<Matrix>& x22v,
                     std::vector<Matrix>& s_out, std::vector<Matrix>* sinv_out) {
    s_out.resize(res.grid.size());
    if (sinv_out) sinv_out->resize(res.grid.size());
    for (size_t i = 0; i < res.grid.size(); ++i) {
      const Matrix n2mat = x12v[i].transpose() * x12v[i] + x22v[i].transpose() * x22v[i];
      Eigen::SelfAdjointEigenSolver<Matrix> es(n2mat);
      if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
      const Vector lam = es.eigenvalues();
      if (!(lam.minCoeff() > 1e-12 * std::max(lam.maxCoeff(), 1e-300)))
        throw ConditioningError("normalizer N is singular to working precision at t=" +
                                std::to_string(res.grid[i]));
      const Matrix nmat = es.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
                          es.eigenvectors().transpose();
      const Matrix ninv = es.eigenvectors() * lam.cwiseSqrt().cwiseInverse().asDiagonal() *
                          es.eigenvectors().transpose();
      Matrix s = Matrix::Identity(res.n, res.n);
      s.topRightCorner(n1, n2) = x12v[i] * ninv;
      s.bottomRightCorner(n2, n2) = x22v[i] * ninv;
      s_out[i] = std::move(s);
      if (sinv_out) {
        const double cond = cond_2norm(x22v[i]);
        if (!(cond <= 1e12))
          throw ConditioningError("X22 is singular to working precision at t=" +
                                  std::to_string(res.grid[i]));
        const Matrix x22inv =
            x22v[i].partialPivLu().solve(Matrix::Identity(n2, n2));
        Matrix sinv = Matrix::Identity(res.n, res.n);
        sinv.topRightCorner(n1, n2) = -x12v[i] * x22inv;
        sinv.bottomRightCorner(n2, n2) = nmat * x22inv;
        (*sinv_out)[i] = std::move(sinv);
      }
    }
  };

  build_s(x12, x22, res.s, &res.sinv);
  record_bounds(res);
  assemble_d(res, sys, dt_actual);

  const auto b11 = sys.a().block(0, 0, n1, n1);
  for (size_t i = 0; i < res.grid.size(); ++i)
    res.max_d1_dev = std::max(
        res.max_d1_dev,
        spectral_norm(res.d[i].topLeftCorner(n1, n1) - b11.eval(res.grid[i])));

  // Truncation sensitivity: doubling t_trunc must leave S unchanged within
  // 1e-6. Skipped (and recorded absent) when the domain already caps it.
  const double t2 = std::min(2.0 * res.t_trunc, domain_end);
  if (t2 > res.t_trunc + dt_actual) {
    std::vector<Matrix> x12b, x22b, s2;
    sweep_x12_x22(sys, n1, n2, t2, res.grid, settings.integ, x12b, x22b);
    build_s(x12b, x22b, s2, nullptr);
    double worst = 0.0;
    for (size_t i = 0; i < res.grid.size(); ++i)
      worst = std::max(worst, spectral_norm(res.s[i] - s2[i]));
    res.trunc_sensitivity = worst;
    if (worst > 1e-6)
      throw TruncationError("doubling the truncation horizon moves S by " +
                            std::to_string(worst) + "; decay is too slow for t_trunc=" +
                            std::to_string(res.t_trunc));
  }
  return res;
}

}  // namespace ltvdet
