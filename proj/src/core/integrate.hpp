#pragma once

#include <functional>
#include <span>
#include <vector>

#include "coefficient.hpp"

namespace ltvdet {

enum class Method { rk4, adaptive };

struct IntegratorSettings {
  Method method = Method::rk4;
  // Fixed step for rk4 / initial step for adaptive. 0 picks the default
  // 1e-3 * min(1, 1/bound), clamped to [1e-5, 1e-1].
  double step = 0.0;
  double rtol = 1e-8;   // adaptive only
  double atol = 1e-10;  // adaptive only
  double min_step = 1e-10;

  double effective_step(double coeff_bound) const;
};

// Right-hand side F(t, X). The side marks which one-sided limit of a
// discontinuous coefficient applies at segment boundaries.
using MatrixRhs = std::function<Matrix(double t, const Matrix& x, Side side)>;

MatrixRhs linear_rhs(const CoefficientFunction& a);

// One classical RK4 step from (t, x) by h (signed). seg_hi is the upper time
// boundary of the smooth segment containing the step; stages landing there
// evaluate the left limit.
Matrix rk4_step(const MatrixRhs& rhs, double t, const Matrix& x, double h, double seg_hi);

// Knot sequence from t0 to t1 (either direction) split at the interior
// breakpoints, endpoints included, near-duplicates merged.
std::vector<double> segment_knots(double t0, double t1, const std::vector<double>& breakpoints);

// Integrates X' = rhs(t, X) from (t0, x0) through output_times (monotone in
// the travel direction; values equal to t0 emit x0). Steps align with
// breakpoints and output times. Throws OverflowError on non-finite states and
// StiffnessError when the adaptive step underflows.
void integrate_path(const MatrixRhs& rhs, const Matrix& x0, double t0,
                    std::span<const double> output_times, const IntegratorSettings& settings,
                    double coeff_bound, const std::vector<double>& breakpoints,
                    const std::function<void(size_t, double, const Matrix&)>& on_output);

// Endpoint-only convenience wrapper.
Matrix integrate_matrix_ode(const MatrixRhs& rhs, const Matrix& x0, double t0, double t1,
                            const IntegratorSettings& settings, double coeff_bound,
                            const std::vector<double>& breakpoints);

}  // namespace ltvdet
