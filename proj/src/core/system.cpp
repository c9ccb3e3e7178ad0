#include "system.hpp"

#include <cmath>

#include "errors.hpp"

namespace ltvdet {

void BlockPartition::validate() const {
  if (n <= 0) throw DimensionError("partition needs n > 0");
  if (k < 0 || k > n) throw DimensionError("partition needs 0 <= k <= n");
}

Matrix BlockPartition::projector() const {
  validate();
  Matrix p = Matrix::Zero(n, n);
  p.bottomRightCorner(k, k).setIdentity();
  return p;
}

LtvSystem::LtvSystem(CoefficientFunction a, CoefficientFunction c, std::string name)
    : a_(std::move(a)), c_(std::move(c)), name_(std::move(name)) {
  if (!a_.valid()) throw InvalidArgumentError("system needs a state coefficient A");
  if (a_.rows() != a_.cols()) throw DimensionError("A(t) must be square");
  n_ = a_.rows();
  if (!c_.valid()) c_ = CoefficientFunction::zero(0, n_);
  if (c_.cols() != n_) throw DimensionError("C(t) must have n columns");
  p_ = c_.rows();
  bound_a_ = a_.bound();
  bound_c_ = c_.bound();
}

double LtvSystem::domain_end() const {
  double e = a_.domain_end();
  if (p_ > 0) e = std::min(e, c_.domain_end());
  return e;
}

double LtvSystem::domain_begin() const {
  double b = a_.domain_begin();
  if (p_ > 0) b = std::max(b, c_.domain_begin());
  return b;
}

LtvSystem assemble_block_triangular(const CoefficientFunction& b11, const CoefficientFunction& b12,
                                    const CoefficientFunction& b22, const CoefficientFunction& c1,
                                    const CoefficientFunction& c2, const BlockPartition& part,
                                    std::string name) {
  part.validate();
  const int n1 = part.n1(), n2 = part.n2(), n = part.n;
  if (b11.rows() != n1 || b11.cols() != n1) throw DimensionError("B11 must be (n-k) x (n-k)");
  if (b22.rows() != n2 || b22.cols() != n2) throw DimensionError("B22 must be k x k");

  std::vector<CoefficientFunction::Placement> a_parts;
  if (n1 > 0) a_parts.push_back({0, 0, b11});
  if (n2 > 0) a_parts.push_back({n1, n1, b22});
  if (b12.valid()) {
    if (b12.rows() != n1 || b12.cols() != n2) throw DimensionError("B12 must be (n-k) x k");
    if (n1 > 0 && n2 > 0) a_parts.push_back({0, n1, b12});
  }
  CoefficientFunction a = CoefficientFunction::blocks(n, n, std::move(a_parts));

  if (!c1.valid() && !c2.valid()) return LtvSystem(a, CoefficientFunction(), std::move(name));
  const int p = c1.valid() ? c1.rows() : c2.rows();
  std::vector<CoefficientFunction::Placement> c_parts;
  if (c1.valid()) {
    if (c1.rows() != p || c1.cols() != n1) throw DimensionError("C1 must be p x (n-k)");
    if (n1 > 0) c_parts.push_back({0, 0, c1});
  }
  if (c2.valid()) {
    if (c2.rows() != p || c2.cols() != n2) throw DimensionError("C2 must be p x k");
    if (n2 > 0) c_parts.push_back({0, n1, c2});
  }
  CoefficientFunction c = CoefficientFunction::blocks(p, n, std::move(c_parts));
  return LtvSystem(a, c, std::move(name));
}

double lower_block_magnitude(const LtvSystem& sys, int k, double t_begin, double t_end,
                             int samples) {
  const int n = sys.n();
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double t = samples == 1 ? t_begin : t_begin + (t_end - t_begin) * s / (samples - 1);
    const Matrix a = sys.a().eval(t);
    if (k < 0) {
      for (int i = 1; i < n; ++i)
        for (int j = 0; j < i; ++j) worst = std::max(worst, std::abs(a(i, j)));
    } else if (k > 0 && k < n) {
      worst = std::max(worst, a.bottomLeftCorner(k, n - k).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

}  // namespace ltvdet
