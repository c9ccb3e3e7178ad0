#include "envelope.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "errors.hpp"

namespace ltvdet {

EnvelopeFit fit_exponential_envelope(std::span<const DecaySample> samples, double tol,
                                     double alpha_cap) {
  if (!(alpha_cap > 0.0)) throw InvalidArgumentError("envelope fit needs a positive rate cap");

  // Upper envelope per gap. Values are norms; clamp to a representable floor
  // so logs stay finite.
  constexpr double kFloor = 1e-300;
  std::map<double, double> env;
  for (const auto& s : samples) {
    if (!std::isfinite(s.value) || s.gap < 0.0)
      throw InvalidArgumentError("envelope fit got a non-finite or negative-gap sample");
    double& v = env[s.gap];
    v = std::max(v, std::max(s.value, kFloor));
  }
  if (env.size() < 2)
    throw InvalidArgumentError("envelope fit needs samples at two or more distinct gaps");

  EnvelopeFit fit;
  fit.sample_count = static_cast<int>(samples.size());
  fit.gap_count = static_cast<int>(env.size());

  const double g0 = env.begin()->first;
  const double logv0 = std::log(env.begin()->second);
  fit.raw_slope = std::numeric_limits<double>::infinity();
  for (auto it = std::next(env.begin()); it != env.end(); ++it)
    fit.raw_slope = std::min(fit.raw_slope, (logv0 - std::log(it->second)) / (it->first - g0));

  // Anchored admissibility, monotone in a (only gaps beyond the anchor bind).
  auto admissible = [&](double a) {
    const double anchor = logv0 + a * g0;
    for (auto it = std::next(env.begin()); it != env.end(); ++it)
      if (std::log(it->second) + a * it->first > anchor + 1e-12) return false;
    return true;
  };

  double alpha = 0.0;
  if (fit.raw_slope > 0.0) {
    double lo = 0.0, hi = std::min(alpha_cap, fit.raw_slope * (1.0 + 1e-9) + 1e-12);
    for (int pass = 0; pass < 4; ++pass) {
      const double step = (hi - lo) / 50.0;
      double best = lo;
      for (int i = 1; i <= 50; ++i) {
        const double a = lo + step * i;
        if (!admissible(a)) break;
        best = a;
      }
      lo = best;
      hi = std::min(hi, best + step);
    }
    alpha = lo;
  } else {
    alpha = fit.raw_slope;  // diagnostic: the data does not decay
  }
  fit.alpha = alpha;

  double peak = 0.0;
  for (const auto& s : samples) {
    const double lifted = std::max(s.value, kFloor) * std::exp(alpha * s.gap);
    if (lifted > peak) {
      peak = lifted;
      fit.worst = s;
    }
  }
  fit.kappa = std::max(1.0, peak);
  fit.residual = peak / fit.kappa - 1.0;
  fit.valid = alpha > 0.0 && fit.residual <= tol;
  return fit;
}

}  // namespace ltvdet
