#pragma once

#include <optional>
#include <string>

#include "coefficient.hpp"

namespace ltvdet {

// State split [x1; x2] with dim(x1) = n - k (potentially unstable part) and
// dim(x2) = k (stable part). The convention throughout: the stable block is
// the trailing one.
struct BlockPartition {
  int n = 0;
  int k = 0;

  int n1() const { return n - k; }
  int n2() const { return k; }

  void validate() const;

  // Projector onto the trailing k coordinates: diag(0, I_k).
  Matrix projector() const;
};

// x' = A(t) x, y = C(t) x with A n x n and C p x n.
class LtvSystem {
 public:
  LtvSystem() = default;
  LtvSystem(CoefficientFunction a, CoefficientFunction c, std::string name = "");

  int n() const { return n_; }
  int p() const { return p_; }
  const std::string& name() const { return name_; }

  const CoefficientFunction& a() const { return a_; }
  const CoefficientFunction& c() const { return c_; }

  // Upper bounds on sup_t ||A(t)|| and sup_t ||C(t)||.
  double bound_a() const { return bound_a_; }
  double bound_c() const { return bound_c_; }

  // Largest usable horizon: min of the coefficient domain ends.
  double domain_end() const;
  double domain_begin() const;

 private:
  CoefficientFunction a_, c_;
  std::string name_;
  int n_ = 0, p_ = 0;
  double bound_a_ = 0.0, bound_c_ = 0.0;
};

// Assembles [[B11, B12], [0, B22]] and [C1, C2]; the lower-left block is
// exactly zero by construction. C2 may be empty (treated as zero).
LtvSystem assemble_block_triangular(const CoefficientFunction& b11, const CoefficientFunction& b12,
                                    const CoefficientFunction& b22, const CoefficientFunction& c1,
                                    const CoefficientFunction& c2, const BlockPartition& part,
                                    std::string name = "");

// Max |entry| of the strictly-lower-left block of A over a sampled grid.
// k < 0 checks elementwise upper-triangularity.
double lower_block_magnitude(const LtvSystem& sys, int k, double t_begin, double t_end,
                             int samples = 201);

inline bool is_upper_block_triangular(const LtvSystem& sys, int k, double t_begin, double t_end,
                                      double tol) {
  return lower_block_magnitude(sys, k, t_begin, t_end) <= tol;
}

}  // namespace ltvdet
