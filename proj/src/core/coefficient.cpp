#include "coefficient.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace ltvdet {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

class CoefficientFunction::Node {
 public:
  virtual ~Node() = default;
  virtual Matrix eval(double t, Side side) const = 0;
  virtual int rows() const = 0;
  virtual int cols() const = 0;
  virtual double bound() const = 0;
  virtual double domain_begin() const { return -kInf; }
  virtual double domain_end() const { return kInf; }
  virtual std::string kind() const = 0;
  virtual void append_breakpoints(double lo, double hi, std::vector<double>& out) const {
    (void)lo, (void)hi, (void)out;
  }

  void check_domain(double t) const {
    const double slack = 1e-9 * (1.0 + std::abs(t));
    if (t < domain_begin() - slack || t > domain_end() + slack)
      throw DomainError("coefficient evaluated at t=" + std::to_string(t) + " outside domain [" +
                        std::to_string(domain_begin()) + ", " + std::to_string(domain_end()) + "]");
  }
};

namespace {

using Node = CoefficientFunction::Node;

class ConstantNode final : public Node {
 public:
  explicit ConstantNode(Matrix v) : value_(std::move(v)), bound_(spectral_norm(value_)) {}
  Matrix eval(double, Side) const override { return value_; }
  int rows() const override { return static_cast<int>(value_.rows()); }
  int cols() const override { return static_cast<int>(value_.cols()); }
  double bound() const override { return bound_; }
  std::string kind() const override { return "constant"; }

 private:
  Matrix value_;
  double bound_;
};

class PeriodicNode final : public Node {
 public:
  PeriodicNode(Matrix offset, std::vector<TrigTerm> terms)
      : offset_(std::move(offset)), terms_(std::move(terms)) {
    for (const auto& tm : terms_) {
      if (tm.row < 0 || tm.row >= offset_.rows() || tm.col < 0 || tm.col >= offset_.cols())
        throw DimensionError("periodic term indexes outside the matrix");
    }
    // Entrywise sup |offset| + sum |amplitude|, then its spectral norm.
    Matrix sup = offset_.cwiseAbs();
    for (const auto& tm : terms_) sup(tm.row, tm.col) += std::abs(tm.amplitude);
    bound_ = spectral_norm(sup);
  }
  Matrix eval(double t, Side) const override {
    Matrix v = offset_;
    for (const auto& tm : terms_) {
      const double arg = tm.frequency * t + tm.phase;
      v(tm.row, tm.col) += tm.amplitude * (tm.use_sin ? std::sin(arg) : std::cos(arg));
    }
    return v;
  }
  int rows() const override { return static_cast<int>(offset_.rows()); }
  int cols() const override { return static_cast<int>(offset_.cols()); }
  double bound() const override { return bound_; }
  std::string kind() const override { return "periodic"; }

 private:
  Matrix offset_;
  std::vector<TrigTerm> terms_;
  double bound_;
};

class PiecewiseNode final : public Node {
 public:
  PiecewiseNode(std::vector<double> breaks, std::vector<Matrix> values)
      : breaks_(std::move(breaks)), values_(std::move(values)) {
    if (values_.empty()) throw InvalidArgumentError("piecewise needs at least one value");
    if (values_.size() != breaks_.size() + 1)
      throw DimensionError("piecewise needs breakpoints.size() + 1 values");
    if (!std::is_sorted(breaks_.begin(), breaks_.end()) ||
        std::adjacent_find(breaks_.begin(), breaks_.end()) != breaks_.end())
      throw InvalidArgumentError("piecewise breakpoints must be strictly increasing");
    bound_ = 0.0;
    for (const auto& v : values_) {
      if (v.rows() != values_[0].rows() || v.cols() != values_[0].cols())
        throw DimensionError("piecewise values must share one shape");
      bound_ = std::max(bound_, spectral_norm(v));
    }
  }
  Matrix eval(double t, Side side) const override {
    // Piece i covers [breaks[i-1], breaks[i]); Side::left picks the piece
    // ending at t when t is exactly a breakpoint.
    auto it = side == Side::right ? std::upper_bound(breaks_.begin(), breaks_.end(), t)
                                  : std::lower_bound(breaks_.begin(), breaks_.end(), t);
    return values_[static_cast<size_t>(it - breaks_.begin())];
  }
  int rows() const override { return static_cast<int>(values_[0].rows()); }
  int cols() const override { return static_cast<int>(values_[0].cols()); }
  double bound() const override { return bound_; }
  std::string kind() const override { return "piecewise"; }
  void append_breakpoints(double lo, double hi, std::vector<double>& out) const override {
    for (double b : breaks_)
      if (b > lo && b < hi) out.push_back(b);
  }

 private:
  std::vector<double> breaks_;
  std::vector<Matrix> values_;
  double bound_;
};

class SampledNode final : public Node {
 public:
  SampledNode(std::vector<double> times, std::vector<Matrix> values)
      : times_(std::move(times)), values_(std::move(values)) {
    if (times_.size() < 2) throw InvalidArgumentError("sampled grid needs at least two samples");
    if (times_.size() != values_.size())
      throw DimensionError("sampled grid needs one value per time");
    for (size_t i = 1; i < times_.size(); ++i)
      if (!(times_[i] > times_[i - 1]))
        throw InvalidArgumentError("sampled grid times must be strictly increasing");
    bound_ = 0.0;
    for (const auto& v : values_) {
      if (v.rows() != values_[0].rows() || v.cols() != values_[0].cols())
        throw DimensionError("sampled values must share one shape");
      bound_ = std::max(bound_, spectral_norm(v));
    }
  }
  Matrix eval(double t, Side) const override {
    const double tc = std::clamp(t, times_.front(), times_.back());
    auto it = std::upper_bound(times_.begin(), times_.end(), tc);
    size_t i = static_cast<size_t>(it - times_.begin());
    if (i == 0) return values_.front();
    if (i == times_.size()) return values_.back();
    const double w = (tc - times_[i - 1]) / (times_[i] - times_[i - 1]);
    return (1.0 - w) * values_[i - 1] + w * values_[i];
  }
  int rows() const override { return static_cast<int>(values_[0].rows()); }
  int cols() const override { return static_cast<int>(values_[0].cols()); }
  double bound() const override { return bound_; }
  double domain_begin() const override { return times_.front(); }
  double domain_end() const override { return times_.back(); }
  std::string kind() const override { return "sampled"; }
  void append_breakpoints(double lo, double hi, std::vector<double>& out) const override {
    // Every grid time is an interpolation kink.
    auto first = std::upper_bound(times_.begin(), times_.end(), lo);
    auto last = std::lower_bound(times_.begin(), times_.end(), hi);
    for (auto it = first; it != last; ++it)
      if (*it > lo && *it < hi) out.push_back(*it);
  }

 private:
  std::vector<double> times_;
  std::vector<Matrix> values_;
  double bound_;
};

class BlockNode final : public Node {
 public:
  BlockNode(int rows, int cols, std::vector<CoefficientFunction::Placement> parts)
      : rows_(rows), cols_(cols), parts_(std::move(parts)) {
    double sq = 0.0;
    begin_ = -kInf;
    end_ = kInf;
    for (const auto& p : parts_) {
      if (!p.fn.valid()) throw InvalidArgumentError("block placement holds an empty coefficient");
      if (p.row < 0 || p.col < 0 || p.row + p.fn.rows() > rows_ || p.col + p.fn.cols() > cols_)
        throw DimensionError("block placement exceeds the assembled shape");
      const double b = p.fn.bound();
      sq += b * b;
      begin_ = std::max(begin_, p.fn.domain_begin());
      end_ = std::min(end_, p.fn.domain_end());
    }
    bound_ = std::sqrt(sq);
  }
  Matrix eval(double t, Side side) const override {
    Matrix v = Matrix::Zero(rows_, cols_);
    for (const auto& p : parts_)
      v.block(p.row, p.col, p.fn.rows(), p.fn.cols()) = p.fn.eval(t, side);
    return v;
  }
  int rows() const override { return rows_; }
  int cols() const override { return cols_; }
  double bound() const override { return bound_; }
  double domain_begin() const override { return begin_; }
  double domain_end() const override { return end_; }
  std::string kind() const override { return "composed"; }
  void append_breakpoints(double lo, double hi, std::vector<double>& out) const override {
    for (const auto& p : parts_) {
      auto bs = p.fn.breakpoints_within(lo, hi);
      out.insert(out.end(), bs.begin(), bs.end());
    }
  }

 private:
  int rows_, cols_;
  std::vector<CoefficientFunction::Placement> parts_;
  double bound_, begin_, end_;
};

class SliceNode final : public Node {
 public:
  SliceNode(CoefficientFunction base, int row, int col, int rows, int cols)
      : base_(std::move(base)), row_(row), col_(col), rows_(rows), cols_(cols) {
    if (row_ < 0 || col_ < 0 || rows_ < 0 || cols_ < 0 || row_ + rows_ > base_.rows() ||
        col_ + cols_ > base_.cols())
      throw DimensionError("slice exceeds the source shape");
  }
  Matrix eval(double t, Side side) const override {
    return base_.eval(t, side).block(row_, col_, rows_, cols_);
  }
  int rows() const override { return rows_; }
  int cols() const override { return cols_; }
  double bound() const override { return base_.bound(); }
  double domain_begin() const override { return base_.domain_begin(); }
  double domain_end() const override { return base_.domain_end(); }
  std::string kind() const override { return "composed"; }
  void append_breakpoints(double lo, double hi, std::vector<double>& out) const override {
    auto bs = base_.breakpoints_within(lo, hi);
    out.insert(out.end(), bs.begin(), bs.end());
  }

 private:
  CoefficientFunction base_;
  int row_, col_, rows_, cols_;
};

class BinaryNode final : public Node {
 public:
  enum class Op { product, difference };
  BinaryNode(Op op, CoefficientFunction l, CoefficientFunction r)
      : op_(op), l_(std::move(l)), r_(std::move(r)) {
    if (op_ == Op::product) {
      if (l_.cols() != r_.rows()) throw DimensionError("product inner dimensions disagree");
      bound_ = l_.bound() * r_.bound();
    } else {
      if (l_.rows() != r_.rows() || l_.cols() != r_.cols())
        throw DimensionError("difference operands disagree in shape");
      bound_ = l_.bound() + r_.bound();
    }
  }
  Matrix eval(double t, Side side) const override {
    if (op_ == Op::product) return l_.eval(t, side) * r_.eval(t, side);
    return l_.eval(t, side) - r_.eval(t, side);
  }
  int rows() const override { return l_.rows(); }
  int cols() const override { return op_ == Op::product ? r_.cols() : l_.cols(); }
  double bound() const override { return bound_; }
  double domain_begin() const override { return std::max(l_.domain_begin(), r_.domain_begin()); }
  double domain_end() const override { return std::min(l_.domain_end(), r_.domain_end()); }
  std::string kind() const override { return "composed"; }
  void append_breakpoints(double lo, double hi, std::vector<double>& out) const override {
    auto a = l_.breakpoints_within(lo, hi);
    auto b = r_.breakpoints_within(lo, hi);
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
  }

 private:
  Op op_;
  CoefficientFunction l_, r_;
  double bound_;
};

}  // namespace

CoefficientFunction CoefficientFunction::constant(Matrix value) {
  return CoefficientFunction(std::make_shared<ConstantNode>(std::move(value)));
}

CoefficientFunction CoefficientFunction::periodic(Matrix offset, std::vector<TrigTerm> terms) {
  return CoefficientFunction(std::make_shared<PeriodicNode>(std::move(offset), std::move(terms)));
}

CoefficientFunction CoefficientFunction::piecewise(std::vector<double> breakpoints,
                                                   std::vector<Matrix> values) {
  return CoefficientFunction(
      std::make_shared<PiecewiseNode>(std::move(breakpoints), std::move(values)));
}

CoefficientFunction CoefficientFunction::sampled(std::vector<double> times,
                                                 std::vector<Matrix> values) {
  return CoefficientFunction(std::make_shared<SampledNode>(std::move(times), std::move(values)));
}

CoefficientFunction CoefficientFunction::zero(int rows, int cols) {
  return constant(Matrix::Zero(rows, cols));
}

CoefficientFunction CoefficientFunction::identity(int n) { return constant(Matrix::Identity(n, n)); }

CoefficientFunction CoefficientFunction::blocks(int rows, int cols,
                                                std::vector<Placement> placements) {
  return CoefficientFunction(std::make_shared<BlockNode>(rows, cols, std::move(placements)));
}

CoefficientFunction CoefficientFunction::block(int row, int col, int rows, int cols) const {
  if (!node_) throw InvalidArgumentError("block() on an empty coefficient");
  return CoefficientFunction(std::make_shared<SliceNode>(*this, row, col, rows, cols));
}

CoefficientFunction operator*(const CoefficientFunction& l, const CoefficientFunction& r) {
  if (!l.valid() || !r.valid()) throw InvalidArgumentError("product of an empty coefficient");
  return CoefficientFunction(std::make_shared<BinaryNode>(BinaryNode::Op::product, l, r));
}

CoefficientFunction operator-(const CoefficientFunction& l, const CoefficientFunction& r) {
  if (!l.valid() || !r.valid()) throw InvalidArgumentError("difference of an empty coefficient");
  return CoefficientFunction(std::make_shared<BinaryNode>(BinaryNode::Op::difference, l, r));
}

Matrix CoefficientFunction::eval(double t, Side side) const {
  if (!node_) throw InvalidArgumentError("eval() on an empty coefficient");
  node_->check_domain(t);
  return node_->eval(t, side);
}

int CoefficientFunction::rows() const { return node_ ? node_->rows() : 0; }
int CoefficientFunction::cols() const { return node_ ? node_->cols() : 0; }
double CoefficientFunction::bound() const { return node_ ? node_->bound() : 0.0; }
double CoefficientFunction::domain_begin() const { return node_ ? node_->domain_begin() : -kInf; }
double CoefficientFunction::domain_end() const { return node_ ? node_->domain_end() : kInf; }
std::string CoefficientFunction::kind() const { return node_ ? node_->kind() : "empty"; }

std::vector<double> CoefficientFunction::breakpoints_within(double lo, double hi) const {
  std::vector<double> out;
  if (node_ && lo < hi) node_->append_breakpoints(lo, hi, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace ltvdet
