#include "qrflow.hpp"

#include <cmath>

#include "errors.hpp"

namespace ltvdet {

namespace {

// Linear interpolation index/weight for a sorted grid.
struct GridPos {
  size_t i0, i1;
  double w;
};

GridPos locate(const std::vector<double>& grid, double t) {
  if (grid.empty()) throw InvalidArgumentError("empty flow grid");
  const double slack = 1e-9 * (1.0 + std::abs(t));
  if (t < grid.front() - slack || t > grid.back() + slack)
    throw DomainError("flow queried outside its grid");
  const double tc = std::clamp(t, grid.front(), grid.back());
  auto it = std::upper_bound(grid.begin(), grid.end(), tc);
  size_t i = static_cast<size_t>(it - grid.begin());
  if (i == 0) return {0, 0, 0.0};
  if (i == grid.size()) return {grid.size() - 1, grid.size() - 1, 0.0};
  const double w = (tc - grid[i - 1]) / (grid[i] - grid[i - 1]);
  return {i - 1, i, w};
}

Matrix skew_from_similarity(const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  Matrix s = Matrix::Zero(n, n);
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      s(i, j) = m(i, j);
      s(j, i) = -m(i, j);
    }
  return s;
}

// Modified Gram-Schmidt with positive normalizers; returns log diag(R') to
// fold into nu.
Vector reorthonormalize(Matrix& q) {
  const int n = static_cast<int>(q.cols());
  Vector logr(n);
  for (int j = 0; j < n; ++j) {
    const double r = q.col(j).norm();
    if (!(r > 0.0)) throw FlowError("flow frame collapsed during re-orthonormalization");
    q.col(j) /= r;
    logr(j) = std::log(r);
    for (int l = j + 1; l < n; ++l) q.col(l) -= q.col(j).dot(q.col(l)) * q.col(j);
  }
  return logr;
}

}  // namespace

Vector QrFlowResult::nu_at(double t) const {
  const GridPos p = locate(grid, t);
  if (p.i0 == p.i1) return nu[p.i0];
  return (1.0 - p.w) * nu[p.i0] + p.w * nu[p.i1];
}

Matrix QrFlowResult::q_at(double t) const {
  const GridPos p = locate(grid, t);
  if (p.i0 == p.i1) return q[p.i0];
  return (1.0 - p.w) * q[p.i0] + p.w * q[p.i1];
}

Matrix skew_generator(const Matrix& a, const Matrix& q) {
  if (a.rows() != a.cols() || q.rows() != q.cols() || a.rows() != q.rows())
    throw DimensionError("skew generator needs square A and Q of equal size");
  const int n = static_cast<int>(a.rows());
  const Matrix aq = a * q;
  Matrix s = Matrix::Zero(n, n);
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      s(i, j) = q.col(i).dot(aq.col(j));
      s(j, i) = -s(i, j);
    }
  return s;
}

QrFlowResult run_qr_flow(const LtvSystem& sys, const Matrix& x0, double t_begin, double t_end,
                         const QrFlowSettings& settings) {
  const int n = sys.n();
  if (!(t_end > t_begin)) throw InvalidArgumentError("flow needs t_end > t_begin");
  if (x0.rows() != n || x0.cols() != n) throw DimensionError("flow anchor X0 must be n x n");

  // Positive-diagonal QR factor of the anchor.
  Eigen::HouseholderQR<Matrix> qr(x0);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  const double scale = x0.norm();
  Vector nu(n);
  for (int i = 0; i < n; ++i) {
    if (std::abs(r(i, i)) <= 1e-12 * std::max(1.0, scale))
      throw InvalidArgumentError("flow anchor X0 is singular to working precision");
    if (r(i, i) < 0.0) q.col(i) = -q.col(i);
    nu(i) = std::log(std::abs(r(i, i)));
  }

  const auto& a_fn = sys.a();
  auto deriv = [&](double t, const Matrix& qv, Side side, Matrix& dq, Vector& dnu) {
    const Matrix a = a_fn.eval(t, side);
    const Matrix m = qv.transpose() * a * qv;
    dq = qv * skew_from_similarity(m);
    dnu = m.diagonal();
  };

  QrFlowResult res;
  const double h = settings.integ.effective_step(sys.bound_a());
  const auto breaks = sys.a().breakpoints_within(t_begin, t_end);
  const auto knots = segment_knots(t_begin, t_end, breaks);

  double t = t_begin;
  long step_index = 0;

  auto record = [&](double tr) {
    const Matrix a = a_fn.eval(tr);
    Matrix s = skew_generator(a, q);
    Matrix b = q.transpose() * a * q - s;
    double lower = 0.0;
    for (int i = 1; i < n; ++i)
      for (int j = 0; j < i; ++j) {
        lower = std::max(lower, std::abs(b(i, j)));
        b(i, j) = 0.0;
      }
    const double ortho = (q.transpose() * q - Matrix::Identity(n, n)).norm();
    res.grid.push_back(tr);
    res.q.push_back(q);
    res.b.push_back(std::move(b));
    res.nu.push_back(nu);
    res.ortho_residual.push_back(ortho);
    res.max_ortho_residual = std::max(res.max_ortho_residual, ortho);
    res.max_lower_residual = std::max(res.max_lower_residual, lower);
  };

  record(t_begin);

  Matrix dq1(n, n), dq2(n, n), dq3(n, n), dq4(n, n);
  Vector dn1(n), dn2(n), dn3(n), dn4(n);
  for (size_t seg = 0; seg + 1 < knots.size(); ++seg) {
    const double seg_end = knots[seg + 1];
    const double len = seg_end - knots[seg];
    if (len <= 0.0) continue;
    const int nsteps = std::max(1, static_cast<int>(std::ceil(len / h - 1e-12)));
    const double hs = len / nsteps;
    for (int i = 0; i < nsteps; ++i) {
      const double tm = t + 0.5 * hs, te = (i + 1 == nsteps) ? seg_end : t + hs;
      auto side = [&](double ts) { return ts >= seg_end ? Side::left : Side::right; };
      deriv(t, q, side(t), dq1, dn1);
      deriv(tm, q + (0.5 * hs) * dq1, side(tm), dq2, dn2);
      deriv(tm, q + (0.5 * hs) * dq2, side(tm), dq3, dn3);
      deriv(te, q + hs * dq3, side(te), dq4, dn4);
      q += (hs / 6.0) * (dq1 + 2.0 * dq2 + 2.0 * dq3 + dq4);
      nu += (hs / 6.0) * (dn1 + 2.0 * dn2 + 2.0 * dn3 + dn4);
      t = te;
      if (!q.allFinite()) throw OverflowError("flow diverged near t=" + std::to_string(t), t);
      ++step_index;

      const double drift = (q.transpose() * q - Matrix::Identity(n, n)).norm();
      if (step_index % settings.reorth_interval == 0 || drift > settings.drift_tol) {
        const Matrix before = q;
        nu += reorthonormalize(q);
        ++res.reorth_count;
        const double change = (q - before).norm();
        if (change > settings.max_reorth_change)
          throw FlowError("re-orthonormalization moved the frame by " + std::to_string(change) +
                          " at t=" + std::to_string(t) + "; step too coarse for this system");
      }
      const bool last = (seg + 2 == knots.size()) && (i + 1 == nsteps);
      if (step_index % settings.record_stride == 0 || last) record(t);
    }
  }
  return res;
}

LtvSystem triangularized_system(const LtvSystem& sys, const QrFlowResult& flow) {
  if (flow.grid.size() < 2) throw InvalidArgumentError("flow grid too short to resample");
  CoefficientFunction a_tri = CoefficientFunction::sampled(flow.grid, flow.b);
  CoefficientFunction c_bar;
  if (sys.p() > 0) {
    std::vector<Matrix> cq(flow.grid.size());
    for (size_t i = 0; i < flow.grid.size(); ++i)
      cq[i] = sys.c().eval(flow.grid[i]) * flow.q[i];
    c_bar = CoefficientFunction::sampled(flow.grid, std::move(cq));
  } else {
    c_bar = CoefficientFunction::zero(0, sys.n());
  }
  const std::string base = sys.name().empty() ? "system" : sys.name();
  return LtvSystem(a_tri, c_bar, base + "-triangularized");
}

}  // namespace ltvdet
