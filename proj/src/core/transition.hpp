#pragma once

#include "integrate.hpp"
#include "system.hpp"

namespace ltvdet {

// One-shot propagation of X' = A(t) X from (t0, x0) to t1 (either direction),
// steps aligned to coefficient breakpoints.
Matrix propagate(const LtvSystem& sys, const Matrix& x0, double t0, double t1,
                 const IntegratorSettings& settings);

// As above but visiting every time in `outputs` (monotone in travel
// direction).
void propagate_path(const LtvSystem& sys, const Matrix& x0, double t0,
                    std::span<const double> outputs, const IntegratorSettings& settings,
                    const std::function<void(size_t, double, const Matrix&)>& on_output);

struct TransitionSettings {
  double factor_span = 1.0;  // time covered by each cached factor
  double cond_cap = 1e8;     // factor/backward inversion conditioning cap
  IntegratorSettings integ;
};

// Caches transition-matrix factors Phi(g_{i+1}, g_i) over a uniform grid of
// [t_begin, t_end] so repeated queries reuse long spans. Backward queries
// invert the forward product; inversions past the conditioning cap throw
// ConditioningError (long spans of strongly expanding dynamics are better
// served by the flow-based routines).
class TransitionCache {
 public:
  TransitionCache(const LtvSystem& sys, double t_begin, double t_end,
                  TransitionSettings settings = {});

  // Phi(t, t0); both times must lie in [t_begin, t_end].
  Matrix transition(double t, double t0) const;

  int factor_count() const { return static_cast<int>(factors_.size()); }
  const Matrix& factor(int i) const { return factors_.at(static_cast<size_t>(i)); }
  double grid_point(int i) const { return grid_.at(static_cast<size_t>(i)); }

 private:
  Matrix forward(double t, double t0) const;

  LtvSystem sys_;
  TransitionSettings settings_;
  std::vector<double> grid_;     // g_0 < ... < g_m
  std::vector<Matrix> factors_;  // factors_[i] = Phi(g_{i+1}, g_i)
};

}  // namespace ltvdet
