#pragma once

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "linalg.hpp"

namespace ltvdet {

// Which one-sided limit to take when t sits exactly on a discontinuity.
// Only piecewise-constant coefficients distinguish the two.
enum class Side { right, left };

// One sinusoidal entry of a periodic coefficient:
//   value(row, col) += amplitude * sin(frequency * t + phase)   (use_sin)
//   value(row, col) += amplitude * cos(frequency * t + phase)   (!use_sin)
struct TrigTerm {
  int row = 0;
  int col = 0;
  double amplitude = 0.0;
  double frequency = 1.0;
  double phase = 0.0;
  bool use_sin = true;
};

// A matrix-valued function of time. Immutable value type; copies share the
// underlying node. Declarable kinds: constant, periodic (trigonometric),
// piecewise-constant, sampled-grid (linear interpolation). Compositions
// (blocks, slices, products, differences) arise internally when systems are
// assembled or transformed and report kind "composed".
struct CoefficientPlacement;

class CoefficientFunction {
 public:
  class Node;

  CoefficientFunction() = default;

  static CoefficientFunction constant(Matrix value);
  static CoefficientFunction periodic(Matrix offset, std::vector<TrigTerm> terms);
  // values.size() == breakpoints.size() + 1; value i applies on
  // [breakpoints[i-1], breakpoints[i]).
  static CoefficientFunction piecewise(std::vector<double> breakpoints, std::vector<Matrix> values);
  // Strictly increasing times (>= 2 of them), one sample per time; linear
  // interpolation between samples, domain [times.front(), times.back()].
  static CoefficientFunction sampled(std::vector<double> times, std::vector<Matrix> values);
  static CoefficientFunction zero(int rows, int cols);
  static CoefficientFunction identity(int n);

  // Block assembly: places each piece at (row, col) offsets in a rows x cols
  // matrix; uncovered entries are exactly zero.
  using Placement = CoefficientPlacement;
  static CoefficientFunction blocks(int rows, int cols,
                                    std::vector<CoefficientPlacement> placements);

  CoefficientFunction block(int row, int col, int rows, int cols) const;
  friend CoefficientFunction operator*(const CoefficientFunction& l, const CoefficientFunction& r);
  friend CoefficientFunction operator-(const CoefficientFunction& l, const CoefficientFunction& r);

  bool valid() const { return node_ != nullptr; }
  Matrix eval(double t, Side side = Side::right) const;
  int rows() const;
  int cols() const;

  // Upper bound on sup_t ||F(t)|| (spectral norm) over the domain. Exact for
  // constants; entrywise/triangle-inequality bounds otherwise.
  double bound() const;

  double domain_begin() const;  // -inf when unbounded below
  double domain_end() const;    // +inf when unbounded above

  std::string kind() const;

  // Discontinuities and interpolation kinks in the open interval (lo, hi),
  // sorted and deduplicated, so integrators can align steps.
  std::vector<double> breakpoints_within(double lo, double hi) const;

 private:
  explicit CoefficientFunction(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

// Block assembly piece: fn placed at (row, col) offsets.
struct CoefficientPlacement {
  int row = 0;
  int col = 0;
  CoefficientFunction fn;
};

}  // namespace ltvdet
