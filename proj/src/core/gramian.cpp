#include "gramian.hpp"

#include <cmath>

#include "errors.hpp"

namespace ltvdet {

Matrix observability_gramian(const LtvSystem& sys, double t0, double t1,
                             const IntegratorSettings& integ) {
  if (!(t1 > t0)) throw InvalidArgumentError("Gramian window needs t1 > t0");
  const int n = sys.n();
  const double slack = 1e-9 * (1.0 + std::max(std::abs(t0), std::abs(t1)));
  if (t0 < sys.domain_begin() - slack || t1 > sys.domain_end() + slack)
    throw DomainError("Gramian window exceeds the coefficient domain");

  std::vector<double> breaks = sys.a().breakpoints_within(t0, t1);
  {
    auto cb = sys.c().breakpoints_within(t0, t1);
    breaks.insert(breaks.end(), cb.begin(), cb.end());
  }
  const auto knots = segment_knots(t0, t1, breaks);
  for (size_t i = 0; i + 1 < knots.size(); ++i)
    if (knots[i + 1] - knots[i] < 1e-12)
      throw GridError("coefficient breakpoints at t=" + std::to_string(knots[i]) +
                      " are closer than the quadrature grid can resolve");

  const double h = integ.effective_step(sys.bound_a());
  const MatrixRhs rhs = linear_rhs(sys.a());
  const auto& c_fn = sys.c();

  Matrix m = Matrix::Zero(n, n);
  Matrix y = Matrix::Identity(n, n);
  double t = t0;

  auto integrand = [&](double s, const Matrix& ys, Side side) -> Matrix {
    const Matrix cy = c_fn.eval(s, side) * ys;
    return cy.transpose() * cy;
  };

  for (size_t seg = 0; seg + 1 < knots.size(); ++seg) {
    const double seg_end = knots[seg + 1], len = seg_end - knots[seg];
    if (len <= 0.0) continue;
    const int half = std::max(1, static_cast<int>(std::ceil(len / (2.0 * h) - 1e-12)));
    const int nsteps = 2 * half;
    const double hs = len / nsteps;
    Matrix g_prev = integrand(t, y, Side::right);
    for (int i = 0; i < half; ++i) {
      y = rk4_step(rhs, t, y, hs, seg_end);
      const double tm = t + hs;
      const Matrix g_mid = integrand(tm, y, tm >= seg_end ? Side::left : Side::right);
      y = rk4_step(rhs, tm, y, hs, seg_end);
      t = (i + 1 == half) ? seg_end : tm + hs;
      if (!y.allFinite()) throw OverflowError("propagation diverged near t=" + std::to_string(t), t);
      const Matrix g_next = integrand(t, y, t >= seg_end ? Side::left : Side::right);
      m += (hs / 3.0) * (g_prev + 4.0 * g_mid + g_next);
      g_prev = g_next;
    }
  }
  return 0.5 * (m + m.transpose());
}

GramianReport check_uco(const LtvSystem& sys, double sigma, std::span<const double> starts,
                        const UcoSettings& settings) {
  if (!(sigma > 0.0)) throw InvalidArgumentError("UCO window sigma must be positive");
  if (starts.empty()) throw InvalidArgumentError("UCO check needs at least one window start");

  GramianReport rep;
  rep.sigma = sigma;
  rep.beta1_threshold = settings.beta1_threshold >= 0.0
                            ? settings.beta1_threshold
                            : 1e-6 * sigma * sys.bound_c() * sys.bound_c();
  rep.beta1_threshold = std::max(rep.beta1_threshold, 1e-12 * std::max(1.0, sigma));

  rep.beta1 = std::numeric_limits<double>::infinity();
  rep.beta2 = 0.0;
  for (double t0 : starts) {
    Matrix m = observability_gramian(sys, t0, t0 + sigma, settings.integ);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.info() != Eigen::Success) throw NumericError("Gramian eigendecomposition failed");
    double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    if (lmin < -1e-10 * std::max(1.0, lmax))
      throw NumericError("Gramian lost positive semidefiniteness at t0=" + std::to_string(t0));
    lmin = std::max(lmin, 0.0);
    rep.starts.push_back(t0);
    rep.gramians.push_back(std::move(m));
    rep.lambda_min.push_back(lmin);
    rep.lambda_max.push_back(lmax);
    rep.beta1 = std::min(rep.beta1, lmin);
    rep.beta2 = std::max(rep.beta2, lmax);
  }
  rep.uco = rep.beta1 >= rep.beta1_threshold;
  return rep;
}

std::pair<GramianReport, GramianReport> check_injection_invariance(
    const LtvSystem& sys, const CoefficientFunction& l, double sigma,
    std::span<const double> starts, const UcoSettings& settings) {
  if (l.rows() != sys.n() || l.cols() != sys.p())
    throw DimensionError("injection gain must be n x p");
  GramianReport open = check_uco(sys, sigma, starts, settings);
  LtvSystem closed(sys.a() - l * sys.c(), sys.c(),
                   (sys.name().empty() ? "system" : sys.name()) + "-injected");
  // Same absolute threshold on both sides so the verdicts are comparable.
  UcoSettings closed_settings = settings;
  closed_settings.beta1_threshold = open.beta1_threshold;
  GramianReport inj = check_uco(closed, sigma, starts, closed_settings);
  return {std::move(open), std::move(inj)};
}

std::vector<double> default_uco_starts(double t_begin, double t_end, double sigma, int count) {
  if (!(sigma > 0.0)) throw InvalidArgumentError("sigma must be positive");
  const double hi = t_end - sigma;
  if (!(hi >= t_begin)) throw InvalidArgumentError("window does not fit the horizon");
  std::vector<double> starts;
  const int m = std::max(1, count);
  for (int i = 0; i < m; ++i)
    starts.push_back(m == 1 ? t_begin : t_begin + (hi - t_begin) * i / (m - 1));
  return starts;
}

}  // namespace ltvdet
