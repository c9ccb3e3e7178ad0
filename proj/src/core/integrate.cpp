#include "integrate.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace ltvdet {

namespace {

constexpr double kHuge = 1e300;

Side side_at(double t, double seg_hi) { return t >= seg_hi ? Side::left : Side::right; }

void check_finite(const Matrix& x, double t) {
  if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kHuge)
    throw OverflowError("state diverged near t=" + std::to_string(t), t);
}

// Dormand-Prince 5(4) tableau.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double kB5[7] = {35.0 / 384,     0.0,        500.0 / 1113, 125.0 / 192,
                           -2187.0 / 6784, 11.0 / 84,  0.0};
constexpr double kB4[7] = {5179.0 / 57600,    0.0,          7571.0 / 16695, 393.0 / 640,
                           -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

// Advances (t, x) to exactly `target` inside one smooth segment.
void advance_rk4(const MatrixRhs& rhs, double& t, Matrix& x, double target, double h,
                 double seg_hi) {
  const double len = std::abs(target - t);
  if (len == 0.0) return;
  const int nsteps = std::max(1, static_cast<int>(std::ceil(len / h - 1e-12)));
  const double hs = (target - t) / nsteps;
  for (int i = 0; i < nsteps; ++i) {
    x = rk4_step(rhs, t, x, hs, seg_hi);
    t = (i + 1 == nsteps) ? target : t + hs;
    check_finite(x, t);
  }
}

void advance_adaptive(const MatrixRhs& rhs, double& t, Matrix& x, double target,
                      const IntegratorSettings& s, double h0, double seg_hi) {
  const double dir = target > t ? 1.0 : -1.0;
  double h = dir * std::abs(h0);
  Matrix k[7];
  while (dir * (target - t) > 0.0) {
    if (std::abs(h) > std::abs(target - t)) h = target - t;
    if (std::abs(h) < s.min_step)
      throw StiffnessError("adaptive step underflow near t=" + std::to_string(t), t);

    for (int i = 0; i < 7; ++i) {
      Matrix xi = x;
      for (int j = 0; j < i; ++j)
        if (kA[i][j] != 0.0) xi += (h * kA[i][j]) * k[j];
      const double ti = t + kC[i] * h;
      k[i] = rhs(ti, xi, side_at(ti, seg_hi));
    }
    Matrix x5 = x, err = Matrix::Zero(x.rows(), x.cols());
    for (int i = 0; i < 7; ++i) {
      if (kB5[i] != 0.0) x5 += (h * kB5[i]) * k[i];
      const double d = kB5[i] - kB4[i];
      if (d != 0.0) err += (h * d) * k[i];
    }

    double scale = 0.0;
    for (int r = 0; r < x.rows(); ++r)
      for (int c = 0; c < x.cols(); ++c) {
        const double denom = s.atol + s.rtol * std::max(std::abs(x(r, c)), std::abs(x5(r, c)));
        scale = std::max(scale, std::abs(err(r, c)) / denom);
      }
    if (!std::isfinite(scale)) scale = std::numeric_limits<double>::max();

    if (scale <= 1.0) {
      t = t + h;
      x = x5;
      check_finite(x, t);
    }
    const double factor =
        scale <= 0.0 ? 5.0 : std::clamp(0.9 * std::pow(scale, -0.2), 0.2, 5.0);
    h *= factor;
  }
}

}  // namespace

double IntegratorSettings::effective_step(double coeff_bound) const {
  if (step > 0.0) return step;
  const double base = coeff_bound > 1.0 ? 1e-3 / coeff_bound : 1e-3;
  return std::clamp(base, 1e-5, 1e-1);
}

MatrixRhs linear_rhs(const CoefficientFunction& a) {
  return [a](double t, const Matrix& x, Side side) -> Matrix { return a.eval(t, side) * x; };
}

Matrix rk4_step(const MatrixRhs& rhs, double t, const Matrix& x, double h, double seg_hi) {
  const double tm = t + 0.5 * h, te = t + h;
  const Matrix k1 = rhs(t, x, side_at(t, seg_hi));
  const Matrix k2 = rhs(tm, x + (0.5 * h) * k1, side_at(tm, seg_hi));
  const Matrix k3 = rhs(tm, x + (0.5 * h) * k2, side_at(tm, seg_hi));
  const Matrix k4 = rhs(te, x + h * k3, side_at(te, seg_hi));
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::vector<double> segment_knots(double t0, double t1, const std::vector<double>& breakpoints) {
  const double lo = std::min(t0, t1), hi = std::max(t0, t1);
  std::vector<double> inner;
  for (double b : breakpoints)
    if (b > lo && b < hi) inner.push_back(b);
  std::sort(inner.begin(), inner.end());
  if (t0 > t1) std::reverse(inner.begin(), inner.end());

  std::vector<double> knots;
  knots.push_back(t0);
  for (double b : inner) {
    if (std::abs(b - knots.back()) > 1e-12 * (1.0 + std::abs(b))) knots.push_back(b);
  }
  if (std::abs(t1 - knots.back()) > 1e-12 * (1.0 + std::abs(t1)) || knots.size() == 1)
    knots.push_back(t1);
  else
    knots.back() = t1;
  return knots;
}

void integrate_path(const MatrixRhs& rhs, const Matrix& x0, double t0,
                    std::span<const double> output_times, const IntegratorSettings& settings,
                    double coeff_bound, const std::vector<double>& breakpoints,
                    const std::function<void(size_t, double, const Matrix&)>& on_output) {
  if (output_times.empty()) return;
  const double t_last = output_times.back();
  const double dir = t_last >= t0 ? 1.0 : -1.0;
  for (size_t i = 0; i < output_times.size(); ++i) {
    if (dir * (output_times[i] - t0) < 0.0)
      throw InvalidArgumentError("output time precedes the start of integration");
    if (i > 0 && dir * (output_times[i] - output_times[i - 1]) < 0.0)
      throw InvalidArgumentError("output times must be monotone in the travel direction");
  }

  const double h = settings.effective_step(coeff_bound);
  double t = t0;
  Matrix x = x0;
  check_finite(x, t);

  size_t oi = 0;
  while (oi < output_times.size() && output_times[oi] == t0) on_output(oi++, t0, x);
  if (oi == output_times.size()) return;

  const auto knots = segment_knots(t0, t_last, breakpoints);
  for (size_t s = 0; s + 1 < knots.size(); ++s) {
    const double seg_end = knots[s + 1];
    const double seg_hi = std::max(knots[s], seg_end);
    // Hit every output inside this segment, then the segment end.
    while (oi < output_times.size() && dir * (output_times[oi] - seg_end) <= 0.0) {
      const double target = output_times[oi];
      if (settings.method == Method::rk4)
        advance_rk4(rhs, t, x, target, h, seg_hi);
      else
        advance_adaptive(rhs, t, x, target, settings, h, seg_hi);
      on_output(oi, t, x);
      ++oi;
    }
    if (oi == output_times.size()) return;
    if (settings.method == Method::rk4)
      advance_rk4(rhs, t, x, seg_end, h, seg_hi);
    else
      advance_adaptive(rhs, t, x, seg_end, settings, h, seg_hi);
  }
}

Matrix integrate_matrix_ode(const MatrixRhs& rhs, const Matrix& x0, double t0, double t1,
                            const IntegratorSettings& settings, double coeff_bound,
                            const std::vector<double>& breakpoints) {
  Matrix out = x0;
  const double times[1] = {t1};
  integrate_path(rhs, x0, t0, times, settings, coeff_bound, breakpoints,
                 [&out](size_t, double, const Matrix& x) { out = x; });
  return out;
}

}  // namespace ltvdet
