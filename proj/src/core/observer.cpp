#include "observer.hpp"

#include <cmath>

#include "errors.hpp"

namespace ltvdet {

Matrix RiccatiSolution::p_at(double t) const {
  if (grid.empty()) throw InvalidArgumentError("empty Riccati grid");
  const double slack = 1e-9 * (1.0 + std::abs(t));
  if (t < grid.front() - slack || t > grid.back() + slack)
    throw DomainError("Riccati solution queried outside its grid");
  const double tc = std::clamp(t, grid.front(), grid.back());
  auto it = std::upper_bound(grid.begin(), grid.end(), tc);
  size_t i = static_cast<size_t>(it - grid.begin());
  if (i == 0) return p.front();
  if (i == grid.size()) return p.back();
  const double w = (tc - grid[i - 1]) / (grid[i] - grid[i - 1]);
  return (1.0 - w) * p[i - 1] + w * p[i];
}

RiccatiSolution solve_filter_riccati(const CoefficientFunction& b1, const CoefficientFunction& c1,
                                     const RiccatiOptions& options, double horizon,
                                     const IntegratorSettings& integ) {
  if (!b1.valid() || b1.rows() != b1.cols()) throw DimensionError("B1 must be square");
  const int m = b1.rows();
  if (!c1.valid() || c1.cols() != m) throw DimensionError("C1 must have as many columns as B1");
  if (!(horizon > 0.0)) throw InvalidArgumentError("Riccati horizon must be positive");

  RiccatiSolution sol;
  sol.qw = options.qw.size() ? options.qw : Matrix::Identity(m, m);
  sol.rv = options.rv.size() ? options.rv : Matrix::Identity(c1.rows(), c1.rows());
  Matrix p0 = options.p0.size() ? options.p0 : Matrix::Identity(m, m);
  if (sol.qw.rows() != m || sol.qw.cols() != m) throw DimensionError("Qw must be m x m");
  if (sol.rv.rows() != c1.rows() || sol.rv.cols() != c1.rows())
    throw DimensionError("Rv must be p x p");
  if (p0.rows() != m || p0.cols() != m) throw DimensionError("P0 must be m x m");

  Eigen::LLT<Matrix> rv_llt(sol.rv);
  if (rv_llt.info() != Eigen::Success)
    throw InvalidArgumentError("Rv must be symmetric positive definite");

  const Matrix qw = 0.5 * (sol.qw + sol.qw.transpose());
  MatrixRhs rhs = [&b1, &c1, &rv_llt, qw](double t, const Matrix& praw, Side side) -> Matrix {
    const Matrix p = 0.5 * (praw + praw.transpose());
    const Matrix bv = b1.eval(t, side);
    const Matrix cv = c1.eval(t, side);
    const Matrix kc = cv.transpose() * rv_llt.solve(cv);  // C1^T Rv^{-1} C1
    return bv * p + p * bv.transpose() - p * kc * p + qw;
  };

  const double coeff_bound = 2.0 * b1.bound() + c1.bound() * c1.bound() + 1.0;
  const double h = integ.effective_step(coeff_bound);
  const int steps = std::max(2, static_cast<int>(std::ceil(horizon / h)));
  sol.grid.resize(static_cast<size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) sol.grid[static_cast<size_t>(i)] = horizon * i / steps;
  sol.p.reserve(sol.grid.size());

  std::vector<double> breaks = b1.breakpoints_within(0.0, horizon);
  {
    auto cb = c1.breakpoints_within(0.0, horizon);
    breaks.insert(breaks.end(), cb.begin(), cb.end());
  }

  sol.lambda_sup = -std::numeric_limits<double>::infinity();
  sol.lambda_inf = std::numeric_limits<double>::infinity();
  integrate_path(rhs, 0.5 * (p0 + p0.transpose()), 0.0, sol.grid, integ, coeff_bound, breaks,
                 [&](size_t, double t, const Matrix& praw) {
                   Matrix p = 0.5 * (praw + praw.transpose());
                   Eigen::SelfAdjointEigenSolver<Matrix> es(p);
                   if (es.info() != Eigen::Success)
                     throw NumericError("Riccati eigendecomposition failed");
                   const double lmax = es.eigenvalues().maxCoeff();
                   const double lmin = es.eigenvalues().minCoeff();
                   if (lmax > options.blowup)
                     throw DivergenceError("Riccati solution diverged at t=" + std::to_string(t) +
                                               " (lambda_max=" + std::to_string(lmax) + ")",
                                           t);
                   sol.lambda_sup = std::max(sol.lambda_sup, lmax);
                   sol.lambda_inf = std::min(sol.lambda_inf, lmin);
                   sol.p.push_back(std::move(p));
                 });

  const Matrix& p_end = sol.p.back();
  const double settle_tol = 1e-6 * (1.0 + p_end.norm());
  size_t first_settled = sol.p.size() - 1;
  while (first_settled > 0 && (sol.p[first_settled - 1] - p_end).norm() <= settle_tol)
    --first_settled;
  sol.settle_time = sol.grid[first_settled];
  return sol;
}

CoefficientFunction riccati_gain(const RiccatiSolution& sol, const CoefficientFunction& c1) {
  Eigen::LLT<Matrix> rv_llt(sol.rv);
  if (rv_llt.info() != Eigen::Success)
    throw InvalidArgumentError("Rv must be symmetric positive definite");
  std::vector<Matrix> gains(sol.grid.size());
  for (size_t i = 0; i < sol.grid.size(); ++i) {
    const Matrix cv = c1.eval(sol.grid[i]);
    gains[i] = sol.p[i] * (rv_llt.solve(cv)).transpose();  // P C1^T Rv^{-1}
  }
  return CoefficientFunction::sampled(sol.grid, std::move(gains));
}

CoefficientFunction structured_gain(const BlockPartition& part, const CoefficientFunction& l1) {
  part.validate();
  if (l1.rows() != part.n1()) throw DimensionError("L1 must have n - k rows");
  const int p = l1.cols();
  std::vector<CoefficientFunction::Placement> parts;
  if (part.n1() > 0) parts.push_back({0, 0, l1});
  return CoefficientFunction::blocks(part.n, p, std::move(parts));
}

DecayCertificate certify_error_decay(const LtvSystem& sys, const CoefficientFunction& l,
                                     double horizon, const CertGrid& grid, double tol,
                                     const IntegratorSettings& integ) {
  if (l.rows() != sys.n() || l.cols() != sys.p())
    throw DimensionError("observer gain must be n x p");
  if (grid.gaps.size() < 2) throw InvalidArgumentError("decay grid needs >= 2 gaps");
  if (grid.t0_count < 2) throw InvalidArgumentError("decay grid needs >= 2 starts");

  LtvSystem err(sys.a() - l * sys.c(), sys.c(),
                (sys.name().empty() ? "system" : sys.name()) + "-error");

  DecayCertificate cert;
  cert.gain_bound = l.bound();
  cert.grid = grid;

  // Small-gap burn-in: transients shorter than the coefficient timescale say
  // nothing about the asymptotic envelope.
  const double burn = 1.0 / std::max(err.bound_a(), 1e-12);
  std::vector<double> gaps;
  for (double g : grid.gaps)
    if (g >= burn) gaps.push_back(g);
  if (gaps.size() < 2) {
    gaps = grid.gaps;
    cert.burn_in = 0.0;
  } else {
    cert.burn_in = burn;
  }
  std::sort(gaps.begin(), gaps.end());
  cert.grid.gaps = gaps;

  const double max_gap = gaps.back();
  const double t0_lo = std::max(grid.t0_min, 0.0);
  const double t0_hi = horizon - max_gap;
  if (!(t0_hi > t0_lo)) throw InvalidArgumentError("horizon too short for the decay grid");
  cert.grid.t0_min = t0_lo;

  const Matrix eye = Matrix::Identity(sys.n(), sys.n());
  for (int i = 0; i < grid.t0_count; ++i) {
    const double t0 = t0_lo + (t0_hi - t0_lo) * i / (grid.t0_count - 1);
    std::vector<double> outs;
    for (double g : gaps) outs.push_back(t0 + g);
    propagate_path(err, eye, t0, outs, integ, [&](size_t j, double, const Matrix& y) {
      cert.samples.push_back({t0, gaps[j], spectral_norm(y)});
    });
  }

  const EnvelopeFit fit = fit_exponential_envelope(cert.samples, tol, err.bound_a() + 2.0);
  cert.kappa = fit.kappa;
  cert.mu = fit.alpha;
  cert.residual = fit.residual;
  cert.raw_slope = fit.raw_slope;
  cert.worst = fit.worst;
  cert.valid = fit.valid && std::isfinite(cert.gain_bound);
  return cert;
}

}  // namespace ltvdet
