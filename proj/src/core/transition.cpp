#include "transition.hpp"

#include <cmath>

#include "errors.hpp"

namespace ltvdet {

Matrix propagate(const LtvSystem& sys, const Matrix& x0, double t0, double t1,
                 const IntegratorSettings& settings) {
  if (x0.rows() != sys.n()) throw DimensionError("initial state has wrong row count");
  const auto breaks = sys.a().breakpoints_within(std::min(t0, t1), std::max(t0, t1));
  return integrate_matrix_ode(linear_rhs(sys.a()), x0, t0, t1, settings, sys.bound_a(), breaks);
}

void propagate_path(const LtvSystem& sys, const Matrix& x0, double t0,
                    std::span<const double> outputs, const IntegratorSettings& settings,
                    const std::function<void(size_t, double, const Matrix&)>& on_output) {
  if (outputs.empty()) return;
  if (x0.rows() != sys.n()) throw DimensionError("initial state has wrong row count");
  const double lo = std::min(t0, outputs.back()), hi = std::max(t0, outputs.back());
  const auto breaks = sys.a().breakpoints_within(lo, hi);
  integrate_path(linear_rhs(sys.a()), x0, t0, outputs, settings, sys.bound_a(), breaks, on_output);
}

TransitionCache::TransitionCache(const LtvSystem& sys, double t_begin, double t_end,
                                 TransitionSettings settings)
    : sys_(sys), settings_(settings) {
  if (!(t_end > t_begin)) throw InvalidArgumentError("transition cache needs t_end > t_begin");
  if (!(settings_.factor_span > 0.0)) throw InvalidArgumentError("factor span must be positive");

  const int m = std::max(1, static_cast<int>(std::ceil((t_end - t_begin) / settings_.factor_span -
                                                       1e-12)));
  grid_.resize(static_cast<size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) grid_[static_cast<size_t>(i)] = t_begin + (t_end - t_begin) * i / m;

  const Matrix eye = Matrix::Identity(sys_.n(), sys_.n());
  factors_.reserve(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    Matrix f = propagate(sys_, eye, grid_[static_cast<size_t>(i)],
                         grid_[static_cast<size_t>(i) + 1], settings_.integ);
    const double c = cond_2norm(f);
    if (!(c <= settings_.cond_cap))
      throw ConditioningError("transition factor over [" +
                              std::to_string(grid_[static_cast<size_t>(i)]) + ", " +
                              std::to_string(grid_[static_cast<size_t>(i) + 1]) +
                              "] is singular to working precision (cond " + std::to_string(c) +
                              ")");
    factors_.push_back(std::move(f));
  }
}

Matrix TransitionCache::forward(double t, double t0) const {
  // Compose cached factors across whole cells, integrating the two partial
  // cells at the ends.
  const double span = grid_[1] - grid_[0];
  const Matrix eye = Matrix::Identity(sys_.n(), sys_.n());

  size_t i0 = std::min(factors_.size() - 1,
                       static_cast<size_t>(std::max(0.0, std::floor((t0 - grid_[0]) / span))));
  while (i0 + 1 < grid_.size() - 1 && grid_[i0 + 1] <= t0) ++i0;

  const double first_stop = grid_[i0 + 1];
  if (t <= first_stop) return propagate(sys_, eye, t0, t, settings_.integ);

  Matrix acc = propagate(sys_, eye, t0, first_stop, settings_.integ);
  size_t i = i0 + 1;
  while (i < factors_.size() && grid_[i + 1] <= t) {
    acc = factors_[i] * acc;
    ++i;
  }
  const double reached = grid_[i];
  if (t > reached) acc = propagate(sys_, acc, reached, t, settings_.integ);
  return acc;
}

Matrix TransitionCache::transition(double t, double t0) const {
  const double lo = grid_.front(), hi = grid_.back();
  const double slack = 1e-9 * (1.0 + std::max(std::abs(lo), std::abs(hi)));
  if (t < lo - slack || t > hi + slack || t0 < lo - slack || t0 > hi + slack)
    throw DomainError("transition query outside the cached range");
  if (t == t0) return Matrix::Identity(sys_.n(), sys_.n());
  if (t > t0) return forward(t, t0);
  // Phi(t, t0) = Phi(t0, t)^{-1}; guarded by the conditioning cap.
  return checked_inverse(forward(t0, t), settings_.cond_cap, "backward transition");
}

}  // namespace ltvdet
