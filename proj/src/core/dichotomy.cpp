#include "dichotomy.hpp"

#include <cmath>

#include "errors.hpp"

namespace ltvdet {

ExponentEstimate estimate_exponent_data(const QrFlowResult& flow, const ExponentSettings& settings,
                                        double bound_a) {
  if (flow.grid.size() < 2) throw InvalidArgumentError("flow grid too short");
  const double t_begin = flow.grid.front(), t_end = flow.grid.back();
  const double h = settings.window;
  if (!(h > 0.0)) throw InvalidArgumentError("averaging window must be positive");
  if (t_end - t_begin < 2.0 * h)
    throw InvalidArgumentError("flow horizon must cover at least twice the averaging window");

  ExponentEstimate est;
  est.window = h;
  est.gap_delta = settings.gap_delta > 0.0 ? settings.gap_delta : 0.05 * std::max(bound_a, 1e-6);

  const int n = static_cast<int>(flow.nu.front().size());
  est.lambda_sup = Vector::Constant(n, -std::numeric_limits<double>::infinity());
  est.lambda_inf = Vector::Constant(n, std::numeric_limits<double>::infinity());

  const int m = std::max(2, settings.t0_samples);
  for (int s = 0; s < m; ++s) {
    const double t0 = t_begin + (t_end - h - t_begin) * s / (m - 1);
    const Vector lam = (flow.nu_at(t0 + h) - flow.nu_at(t0)) / h;
    est.lambda_sup = est.lambda_sup.cwiseMax(lam);
    est.lambda_inf = est.lambda_inf.cwiseMin(lam);
  }

  est.classes.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (est.lambda_sup(i) < -est.gap_delta)
      est.classes[static_cast<size_t>(i)] = ExponentClass::stable;
    else if (est.lambda_inf(i) > est.gap_delta)
      est.classes[static_cast<size_t>(i)] = ExponentClass::unstable;
    else {
      est.classes[static_cast<size_t>(i)] = ExponentClass::marginal;
      est.has_marginal = true;
      if (!est.marginal_detail.empty()) est.marginal_detail += "; ";
      est.marginal_detail += "coordinate " + std::to_string(i) + " has windowed rates in [" +
                             std::to_string(est.lambda_inf(i)) + ", " +
                             std::to_string(est.lambda_sup(i)) + "] against margin " +
                             std::to_string(est.gap_delta);
    }
  }

  if (!est.has_marginal) {
    int k = 0;
    while (k < n && est.classes[static_cast<size_t>(n - 1 - k)] == ExponentClass::stable) ++k;
    bool rest_unstable = true;
    for (int i = 0; i < n - k; ++i)
      rest_unstable = rest_unstable && est.classes[static_cast<size_t>(i)] == ExponentClass::unstable;
    if (rest_unstable) {
      est.ordered = true;
      est.proposed_k = k;
    }
  }
  return est;
}

ExponentEstimate estimate_exponents(const QrFlowResult& flow, const ExponentSettings& settings,
                                    double bound_a) {
  ExponentEstimate est = estimate_exponent_data(flow, settings, bound_a);
  if (est.has_marginal)
    throw NoGapError("no exponent gap: " + est.marginal_detail);
  return est;
}

Matrix DichotomyCertificate::projector() const {
  BlockPartition part{n, k};
  return part.projector();
}

namespace {

// Dichotomy projector expressed at each start, Pi(t0) = X(t0) P X(t0)^{-1}
// for the decoupling fundamental solution. Route-dependent realization.
struct ProjectorCurve {
  std::vector<Matrix> pi;  // one per t0
};

constexpr double kTriangularTol = 1e-9;

ProjectorCurve build_projector_curve(const LtvSystem& sys, int k, double horizon,
                                     const std::vector<double>& t0s,
                                     const IntegratorSettings& integ, std::string& route) {
  const int n = sys.n();
  const Matrix p = BlockPartition{n, k}.projector();
  ProjectorCurve curve;
  curve.pi.assign(t0s.size(), p);

  if (k == 0 || k == n) {
    route = "normal-form";
    return curve;
  }

  const double struct_tol = kTriangularTol * std::max(1.0, sys.bound_a());
  if (lower_block_magnitude(sys, k, 0.0, horizon) <= struct_tol) {
    const int n1 = n - k;
    const auto b11 = sys.a().block(0, 0, n1, n1);
    const auto b12 = sys.a().block(0, n1, n1, k);
    const auto b22 = sys.a().block(n1, n1, k, k);

    // Coupled triangular block: Pi(t0) = [[0, G(t0)], [0, I]] where G solves
    // G' = B11 G - G B22 + B12 backward from G(T) = 0; G is bounded whenever
    // the blocks carry the split growth, so no inversions are needed.
    double b12_mag = 0.0;
    for (int s = 0; s <= 200; ++s)
      b12_mag = std::max(b12_mag, b12.eval(horizon * s / 200.0).cwiseAbs().maxCoeff());
    if (b12_mag <= struct_tol) {
      route = "normal-form";
      return curve;
    }

    route = "sylvester";
    const double t_trunc = std::min(sys.a().domain_end(), horizon + 10.0);
    MatrixRhs rhs = [b11, b12, b22](double t, const Matrix& g, Side side) -> Matrix {
      return b11.eval(t, side) * g - g * b22.eval(t, side) + b12.eval(t, side);
    };
    std::vector<double> outputs(t0s.rbegin(), t0s.rend());
    const auto breaks = sys.a().breakpoints_within(outputs.back(), t_trunc);
    integrate_path(rhs, Matrix::Zero(n1, k), t_trunc, outputs, integ, 2.0 * sys.bound_a(), breaks,
                   [&](size_t i, double, const Matrix& g) {
                     Matrix pi = Matrix::Zero(n, n);
                     pi.topRightCorner(n1, k) = g;
                     pi.bottomRightCorner(k, k).setIdentity();
                     curve.pi[t0s.size() - 1 - i] = std::move(pi);
                   });
    return curve;
  }

  // Dense A: conjugate the normal-form projector through the anchored
  // fundamental solution. Conditioning-limited over long horizons.
  route = "anchored";
  TransitionSettings ts;
  ts.integ = integ;
  TransitionCache cache(sys, 0.0, horizon, ts);
  for (size_t i = 0; i < t0s.size(); ++i) {
    const Matrix x = cache.transition(t0s[i], 0.0);
    curve.pi[i] = x * p * checked_inverse(x, ts.cond_cap, "projector conjugation");
  }
  return curve;
}

}  // namespace

DichotomyCertificate certify_dichotomy(const LtvSystem& sys, int k, double horizon,
                                       const CertGrid& grid, double tol,
                                       const IntegratorSettings& integ) {
  const int n = sys.n();
  if (k < 0 || k > n) throw InvalidArgumentError("projector rank k must satisfy 0 <= k <= n");
  if (!(horizon > 0.0)) throw InvalidArgumentError("certification horizon must be positive");
  const double slack = 1e-9 * (1.0 + horizon);
  if (horizon > sys.a().domain_end() + slack)
    throw DomainError("certification horizon exceeds the coefficient domain");
  if (grid.gaps.size() < 2) throw InvalidArgumentError("certification grid needs >= 2 gaps");
  if (grid.t0_count < 2) throw InvalidArgumentError("certification grid needs >= 2 starts");

  double max_gap = 0.0;
  for (double g : grid.gaps) {
    if (!(g > 0.0)) throw InvalidArgumentError("certification gaps must be positive");
    max_gap = std::max(max_gap, g);
  }
  const double t0_lo = std::max(grid.t0_min, 0.0);
  const double t0_hi = horizon - max_gap;
  if (!(t0_hi > t0_lo))
    throw InvalidArgumentError("horizon too short for the certification grid");

  std::vector<double> t0s(static_cast<size_t>(grid.t0_count));
  for (int i = 0; i < grid.t0_count; ++i)
    t0s[static_cast<size_t>(i)] = t0_lo + (t0_hi - t0_lo) * i / (grid.t0_count - 1);

  DichotomyCertificate cert;
  cert.n = n;
  cert.k = k;
  cert.grid = grid;
  cert.grid.t0_min = t0_lo;
  cert.horizon = horizon;
  cert.tol = tol;

  const ProjectorCurve curve =
      build_projector_curve(sys, k, horizon, t0s, integ, cert.projector_route);

  std::vector<double> gaps_sorted = grid.gaps;
  std::sort(gaps_sorted.begin(), gaps_sorted.end());

  const Matrix eye = Matrix::Identity(n, n);
  for (size_t i = 0; i < t0s.size(); ++i) {
    const double t0 = t0s[i];
    if (k > 0) {
      std::vector<double> fw;
      for (double g : gaps_sorted) fw.push_back(t0 + g);
      propagate_path(sys, curve.pi[i], t0, fw, integ,
                     [&](size_t j, double, const Matrix& y) {
                       cert.stable_samples.push_back({t0, gaps_sorted[j], spectral_norm(y)});
                     });
    }
    if (k < n) {
      std::vector<double> bw, bw_gaps;
      for (double g : gaps_sorted)
        if (t0 - g >= -1e-12) {
          bw.push_back(t0 - g);
          bw_gaps.push_back(g);
        }
      if (!bw.empty()) {
        propagate_path(sys, eye - curve.pi[i], t0, bw, integ,
                       [&](size_t j, double, const Matrix& y) {
                         cert.unstable_samples.push_back({t0, bw_gaps[j], spectral_norm(y)});
                       });
      }
    }
  }

  const double alpha_cap = sys.bound_a() + 2.0;
  EnvelopeFit stable_fit, unstable_fit;
  double alpha = std::numeric_limits<double>::infinity();
  if (k > 0) {
    stable_fit = fit_exponential_envelope(cert.stable_samples, tol, alpha_cap);
    cert.stable_alpha = stable_fit.alpha;
    if (!stable_fit.valid)
      throw CertificationError(
          "no valid stable-side envelope: rate bound " + std::to_string(stable_fit.raw_slope) +
          ", worst pair t0=" + std::to_string(stable_fit.worst.t0) +
          " gap=" + std::to_string(stable_fit.worst.gap) +
          " value=" + std::to_string(stable_fit.worst.value) + " (k=" + std::to_string(k) + ")");
    alpha = std::min(alpha, stable_fit.alpha);
  }
  if (k < n) {
    if (cert.unstable_samples.empty())
      throw InvalidArgumentError("certification grid leaves no backward pairs");
    unstable_fit = fit_exponential_envelope(cert.unstable_samples, tol, alpha_cap);
    cert.unstable_alpha = unstable_fit.alpha;
    if (!unstable_fit.valid)
      throw CertificationError(
          "no valid unstable-side envelope: rate bound " + std::to_string(unstable_fit.raw_slope) +
          ", worst pair t0=" + std::to_string(unstable_fit.worst.t0) +
          " gap=" + std::to_string(unstable_fit.worst.gap) +
          " value=" + std::to_string(unstable_fit.worst.value) + " (k=" + std::to_string(k) + ")");
    alpha = std::min(alpha, unstable_fit.alpha);
  }

  cert.alpha = alpha;
  double peak = 1.0;
  for (const auto& s : cert.stable_samples)
    peak = std::max(peak, s.value * std::exp(alpha * s.gap));
  for (const auto& s : cert.unstable_samples)
    peak = std::max(peak, s.value * std::exp(alpha * s.gap));
  cert.kappa = peak;

  auto side_residual = [&](const std::vector<DecaySample>& ss) {
    double worst = 0.0;
    for (const auto& s : ss)
      worst = std::max(worst, s.value * std::exp(alpha * s.gap) / cert.kappa - 1.0);
    return worst;
  };
  cert.stable_residual = side_residual(cert.stable_samples);
  cert.unstable_residual = side_residual(cert.unstable_samples);
  if (cert.stable_residual > tol || cert.unstable_residual > tol)
    throw CertificationError("combined envelope misses tolerance: residuals " +
                             std::to_string(cert.stable_residual) + " / " +
                             std::to_string(cert.unstable_residual));
  return cert;
}

}  // namespace ltvdet
