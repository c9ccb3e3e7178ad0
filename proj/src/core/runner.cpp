#include "runner.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>

#include <json.hpp>

#include "detect.hpp"
#include "errors.hpp"

namespace ltvdet {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------- options

double opt_number(const json& j, const char* key, double fallback, bool positive = false) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw InvalidArgumentError(std::string("option '") + key + "' must be a number");
  const double v = j[key].get<double>();
  if (positive && !(v > 0.0))
    throw InvalidArgumentError(std::string("option '") + key + "' must be positive");
  return v;
}

int opt_int(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer())
    throw InvalidArgumentError(std::string("option '") + key + "' must be an integer");
  return j[key].get<int>();
}

bool opt_bool(const json& j, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean())
    throw InvalidArgumentError(std::string("option '") + key + "' must be a boolean");
  return j[key].get<bool>();
}

std::string opt_string(const json& j, const char* key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string())
    throw InvalidArgumentError(std::string("option '") + key + "' must be a string");
  return j[key].get<std::string>();
}

uint64_t opt_seed(const json& j) {
  if (!j.contains("seed")) return 0;
  if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
    throw InvalidArgumentError("option 'seed' must be a non-negative integer");
  if (j["seed"].is_number_integer() && j["seed"].get<int64_t>() < 0)
    throw InvalidArgumentError("option 'seed' must be a non-negative integer");
  return j["seed"].get<uint64_t>();
}

std::vector<double> opt_number_list(const json& j, const char* key,
                                    std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_array())
    throw InvalidArgumentError(std::string("option '") + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : j[key]) {
    if (!e.is_number())
      throw InvalidArgumentError(std::string("option '") + key + "' must contain only numbers");
    out.push_back(e.get<double>());
  }
  if (out.empty())
    throw InvalidArgumentError(std::string("option '") + key + "' must not be empty");
  return out;
}

IntegratorSettings read_integ(const json& j) {
  IntegratorSettings s;
  const std::string method = opt_string(j, "method", "rk4");
  if (method == "rk4")
    s.method = Method::rk4;
  else if (method == "adaptive")
    s.method = Method::adaptive;
  else
    throw InvalidArgumentError("option 'method' must be \"rk4\" or \"adaptive\"");
  s.step = opt_number(j, "step", 0.0, true);
  s.rtol = opt_number(j, "rtol", s.rtol, true);
  s.atol = opt_number(j, "atol", s.atol, true);
  return s;
}

CertGrid read_cert_grid(const json& j) {
  CertGrid g;
  g.t0_count = opt_int(j, "t0_count", g.t0_count);
  if (g.t0_count < 2) throw InvalidArgumentError("option 't0_count' must be at least 2");
  g.gaps = opt_number_list(j, "gaps", g.gaps);
  for (double gap : g.gaps)
    if (!(gap > 0.0)) throw InvalidArgumentError("option 'gaps' must be positive");
  g.t0_min = opt_number(j, "t0_min", g.t0_min);
  return g;
}

double read_horizon(const json& j, const ParsedSystem& parsed) {
  double fallback = parsed.tmax;
  const double dom = parsed.system.domain_end();
  if (std::isfinite(dom)) fallback = std::min(fallback, dom);
  const double h = opt_number(j, "horizon", fallback, true);
  if (std::isfinite(dom) && h > dom + 1e-9 * (1.0 + std::abs(dom)))
    throw DomainError("horizon " + std::to_string(h) + " exceeds the coefficient domain end " +
                      std::to_string(dom));
  return h;
}

// ----------------------------------------------------------------- report

std::string timestamp_utc() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json base_report(const ParsedSystem& parsed, const std::string& op, uint64_t seed) {
  const LtvSystem& sys = parsed.system;
  json r;
  r["schema"] = kReportSchema;
  r["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  r["op"] = op;
  r["seed"] = seed;
  r["system"] = {{"name", sys.name()}, {"n", sys.n()},       {"p", sys.p()},
                 {"bound_a", sys.bound_a()}, {"bound_c", sys.bound_c()}, {"tmax", parsed.tmax}};
  return r;
}

std::string finish(json& r) {
  r["meta"] = {{"generated_at", timestamp_utc()}};
  return r.dump(2) + "\n";
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

const char* class_name(ExponentClass c) {
  switch (c) {
    case ExponentClass::stable: return "stable";
    case ExponentClass::unstable: return "unstable";
    case ExponentClass::marginal: return "marginal";
  }
  return "marginal";
}

json exponents_json(const ExponentEstimate& e) {
  json j;
  j["window"] = e.window;
  j["gap_delta"] = e.gap_delta;
  j["lambda_sup"] = vector_json(e.lambda_sup);
  j["lambda_inf"] = vector_json(e.lambda_inf);
  json cls = json::array();
  for (auto c : e.classes) cls.push_back(class_name(c));
  j["classes"] = std::move(cls);
  j["ordered"] = e.ordered;
  j["proposed_k"] = e.proposed_k ? json(*e.proposed_k) : json(nullptr);
  j["has_marginal"] = e.has_marginal;
  if (!e.marginal_detail.empty()) j["marginal_detail"] = e.marginal_detail;
  return j;
}

json cert_grid_json(const CertGrid& g) {
  return {{"t0_count", g.t0_count}, {"gaps", g.gaps}, {"t0_min", g.t0_min}};
}

json dichotomy_json(const DichotomyCertificate& c) {
  json j;
  j["n"] = c.n;
  j["k"] = c.k;
  j["kappa"] = c.kappa;
  j["alpha"] = c.alpha;
  j["stable_alpha"] = c.stable_alpha;
  j["unstable_alpha"] = c.unstable_alpha;
  j["residuals"] = {{"stable", c.stable_residual}, {"unstable", c.unstable_residual}};
  j["grid"] = cert_grid_json(c.grid);
  j["horizon"] = c.horizon;
  j["tol"] = c.tol;
  j["projector_route"] = c.projector_route;
  j["sample_counts"] = {{"stable", c.stable_samples.size()},
                        {"unstable", c.unstable_samples.size()}};
  return j;
}

json gramian_json(const GramianReport& g) {
  json j;
  j["sigma"] = g.sigma;
  j["threshold"] = g.beta1_threshold;
  j["beta1"] = g.beta1;
  j["beta2"] = g.beta2;
  j["uco"] = g.uco;
  j["starts"] = g.starts;
  j["lambda_min"] = g.lambda_min;
  j["lambda_max"] = g.lambda_max;
  return j;
}

json decay_json(const DecayCertificate& d) {
  json j;
  j["kappa"] = d.kappa;
  j["mu"] = d.mu;
  j["residual"] = d.residual;
  j["valid"] = d.valid;
  j["raw_slope"] = d.raw_slope;
  j["gain_bound"] = d.gain_bound;
  j["burn_in"] = d.burn_in;
  j["grid"] = cert_grid_json(d.grid);
  j["worst"] = {{"t0", d.worst.t0}, {"gap", d.worst.gap}, {"norm", d.worst.value}};
  j["sample_count"] = d.samples.size();
  return j;
}

json reduction_json(const ReductionResult& r, const std::string& route) {
  json j;
  j["route"] = route;
  j["n"] = r.n;
  j["k"] = r.k;
  j["grid_points"] = r.grid.size();
  j["sup_s"] = r.sup_s;
  j["sup_sinv"] = r.sup_sinv;
  j["sup_sdot"] = r.sup_sdot;
  j["max_offdiag"] = r.max_offdiag;
  j["max_identity_dev"] = r.max_identity_dev;
  if (route == "triangular") {
    j["t_trunc"] = r.t_trunc;
    j["max_d1_dev"] = r.max_d1_dev;
    j["trunc_sensitivity"] = r.trunc_sensitivity ? json(*r.trunc_sensitivity) : json(nullptr);
  }
  return j;
}

// ------------------------------------------------------------------ curves

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class CsvBuilder {
 public:
  explicit CsvBuilder(const std::vector<std::string>& columns) {
    for (size_t i = 0; i < columns.size(); ++i) {
      if (i) out_ += ',';
      out_ += columns[i];
    }
    out_ += '\n';
  }
  void row(std::initializer_list<double> values) {
    size_t i = 0;
    for (double v : values) {
      if (i++) out_ += ',';
      out_ += fmt(v);
    }
    out_ += '\n';
  }
  void row(const std::vector<double>& values) {
    for (size_t i = 0; i < values.size(); ++i) {
      if (i) out_ += ',';
      out_ += fmt(values[i]);
    }
    out_ += '\n';
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

NamedCurve qr_curve(const QrFlowResult& flow) {
  const int n = flow.nu.empty() ? 0 : static_cast<int>(flow.nu.front().size());
  std::vector<std::string> cols{"t"};
  for (int i = 1; i <= n; ++i) cols.push_back("nu" + std::to_string(i));
  for (int i = 1; i <= n; ++i) cols.push_back("bdiag" + std::to_string(i));
  cols.push_back("ortho_residual");
  CsvBuilder csv(cols);
  std::vector<double> row(cols.size());
  for (size_t g = 0; g < flow.grid.size(); ++g) {
    size_t c = 0;
    row[c++] = flow.grid[g];
    for (int i = 0; i < n; ++i) row[c++] = flow.nu[g](i);
    for (int i = 0; i < n; ++i) row[c++] = flow.b[g](i, i);
    row[c++] = flow.ortho_residual[g];
    csv.row(row);
  }
  return {"qr_flow", csv.take()};
}

NamedCurve dichotomy_curve(const DichotomyCertificate& cert) {
  CsvBuilder csv({"t0", "gap", "norm", "side"});
  for (const auto& s : cert.stable_samples) csv.row({s.t0, s.gap, s.value, 0.0});
  for (const auto& s : cert.unstable_samples) csv.row({s.t0, s.gap, s.value, 1.0});
  return {"decay", csv.take()};
}

NamedCurve decay_curve(const DecayCertificate& cert) {
  CsvBuilder csv({"t0", "gap", "norm"});
  for (const auto& s : cert.samples) csv.row({s.t0, s.gap, s.value});
  return {"decay", csv.take()};
}

NamedCurve gramian_curve(const GramianReport& rep) {
  CsvBuilder csv({"t0", "lambda_min", "lambda_max"});
  for (size_t i = 0; i < rep.starts.size(); ++i)
    csv.row({rep.starts[i], rep.lambda_min[i], rep.lambda_max[i]});
  return {"gramian", csv.take()};
}

NamedCurve gain_curve(const CoefficientFunction& l, double horizon) {
  const int rows = l.rows(), cols = l.cols();
  std::vector<std::string> header{"t"};
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      header.push_back("l" + std::to_string(r + 1) + std::to_string(c + 1));
  CsvBuilder csv(header);
  const int samples = 2000;
  const double lo = std::max(0.0, l.domain_begin());
  const double hi = std::min(horizon, l.domain_end());
  std::vector<double> row(header.size());
  for (int i = 0; i <= samples; ++i) {
    const double t = lo + (hi - lo) * i / samples;
    const Matrix v = l.eval(t);
    size_t c = 0;
    row[c++] = t;
    for (int rr = 0; rr < rows; ++rr)
      for (int cc = 0; cc < cols; ++cc) row[c++] = v(rr, cc);
    csv.row(row);
  }
  return {"gain", csv.take()};
}

NamedCurve reduce_curve(const ReductionResult& res) {
  CsvBuilder csv({"t", "s_norm", "sinv_norm", "offdiag"});
  for (size_t i = 0; i < res.grid.size(); ++i)
    csv.row({res.grid[i], spectral_norm(res.s[i]), spectral_norm(res.sinv[i]),
             res.offdiag.empty() ? 0.0 : res.offdiag[i]});
  return {"reduce", csv.take()};
}

// --------------------------------------------------------------- partition

struct KChoice {
  int k = 0;
  std::string source;  // "option" | "partition" | "exponents"
  std::shared_ptr<QrFlowResult> flow;  // set when the proposal ran
};

KChoice resolve_k(const ParsedSystem& parsed, const json& j, double horizon,
                  const IntegratorSettings& integ, const ExponentSettings& es) {
  const LtvSystem& sys = parsed.system;
  KChoice out;
  if (j.contains("k")) {
    out.k = opt_int(j, "k", 0);
    out.source = "option";
  } else if (parsed.partition) {
    out.k = parsed.partition->k;
    out.source = "partition";
  } else {
    QrFlowSettings qs;
    qs.integ = integ;
    out.flow = std::make_shared<QrFlowResult>(
        run_qr_flow(sys, Matrix::Identity(sys.n(), sys.n()), 0.0, horizon, qs));
    const ExponentEstimate est = estimate_exponents(*out.flow, es, sys.bound_a());
    if (!est.proposed_k)
      throw CertificationError(
          "windowed rates do not propose a partition: stable coordinates are not trailing");
    out.k = *est.proposed_k;
    out.source = "exponents";
  }
  BlockPartition{sys.n(), out.k}.validate();
  return out;
}

ExponentSettings read_exponent_settings(const json& j) {
  ExponentSettings es;
  es.window = opt_number(j, "window", es.window, true);
  es.gap_delta = opt_number(j, "gap_delta", es.gap_delta);
  return es;
}

// -------------------------------------------------------------------- ops

RunResult run_qr(const ParsedSystem& parsed, const json& j, uint64_t seed) {
  const LtvSystem& sys = parsed.system;
  const double horizon = read_horizon(j, parsed);
  const IntegratorSettings integ = read_integ(j);
  const ExponentSettings es = read_exponent_settings(j);

  QrFlowSettings qs;
  qs.integ = integ;
  const QrFlowResult flow =
      run_qr_flow(sys, Matrix::Identity(sys.n(), sys.n()), 0.0, horizon, qs);
  const ExponentEstimate est = estimate_exponent_data(flow, es, sys.bound_a());

  json r = base_report(parsed, "qr", seed);
  r["config"] = {{"horizon", horizon},
                 {"method", integ.method == Method::rk4 ? "rk4" : "adaptive"},
                 {"step", integ.step},
                 {"rtol", integ.rtol},
                 {"atol", integ.atol},
                 {"window", es.window}};
  r["result"] = {{"grid_points", flow.grid.size()},
                 {"max_ortho_residual", flow.max_ortho_residual},
                 {"max_lower_residual", flow.max_lower_residual},
                 {"reorth_count", flow.reorth_count},
                 {"exponents", exponents_json(est)}};

  RunResult out;
  out.curves.push_back(qr_curve(flow));
  out.report_json = finish(r);
  return out;
}

RunResult run_dichotomy(const ParsedSystem& parsed, const json& j, uint64_t seed) {
  const LtvSystem& sys = parsed.system;
  const double horizon = read_horizon(j, parsed);
  const IntegratorSettings integ = read_integ(j);
  const CertGrid grid = read_cert_grid(j);
  const double tol = opt_number(j, "tol", 1e-3, true);
  const KChoice kc = resolve_k(parsed, j, horizon, integ, read_exponent_settings(j));

  json r = base_report(parsed, "dichotomy", seed);
  r["config"] = {{"horizon", horizon},
                 {"method", integ.method == Method::rk4 ? "rk4" : "adaptive"},
                 {"step", integ.step},
                 {"rtol", integ.rtol},
                 {"atol", integ.atol},
                 {"k", kc.k},
                 {"k_source", kc.source},
                 {"tol", tol},
                 {"grid", cert_grid_json(grid)}};

  RunResult out;
  json res;
  try {
    const DichotomyCertificate cert = certify_dichotomy(sys, kc.k, horizon, grid, tol, integ);
    res["certified"] = true;
    res["certificate"] = dichotomy_json(cert);
    out.curves.push_back(dichotomy_curve(cert));
  } catch (const NumericError& e) {
    // A failed certification is an analysis outcome, not an operational error.
    res["certified"] = false;
    res["detail"] = e.what();
  }
  r["result"] = std::move(res);
  out.report_json = finish(r);
  return out;
}

RunResult run_gramian(const ParsedSystem& parsed, const json& j, uint64_t seed) {
  const LtvSystem& sys = parsed.system;
  const double horizon = read_horizon(j, parsed);
  const IntegratorSettings integ = read_integ(j);

  json r = base_report(parsed, "gramian", seed);
  RunResult out;

  if (j.contains("t0") || j.contains("t1")) {
    const double t0 = opt_number(j, "t0", 0.0);
    const double t1 = opt_number(j, "t1", horizon);
    if (!(t1 > t0)) throw InvalidArgumentError("options 't0'/'t1' must satisfy t1 > t0");
    const Matrix m = observability_gramian(sys, t0, t1, integ);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
    r["config"] = {{"t0", t0},
                   {"t1", t1},
                   {"method", integ.method == Method::rk4 ? "rk4" : "adaptive"},
                   {"step", integ.step},
                   {"rtol", integ.rtol},
                   {"atol", integ.atol}};
    r["result"] = {{"gramian", matrix_json(m)},
                   {"lambda_min", eig.eigenvalues().minCoeff()},
                   {"lambda_max", eig.eigenvalues().maxCoeff()}};
    out.report_json = finish(r);
    return out;
  }

  const double sigma = opt_number(j, "sigma", 1.0, true);
  if (sigma >= horizon)
    throw InvalidArgumentError("option 'sigma' must be smaller than the horizon");
  const int starts = opt_int(j, "starts", 32);
  if (starts < 1) throw InvalidArgumentError("option 'starts' must be at least 1");
  UcoSettings us;
  us.beta1_threshold = opt_number(j, "threshold", -1.0);
  us.integ = integ;
  const auto t0s = default_uco_starts(std::max(0.0, sys.domain_begin()), horizon, sigma, starts);
  const GramianReport rep = check_uco(sys, sigma, t0s, us);

  r["config"] = {{"sigma", sigma},
                 {"starts", starts},
                 {"threshold", rep.beta1_threshold},
                 {"horizon", horizon},
                 {"method", integ.method == Method::rk4 ? "rk4" : "adaptive"},
                 {"step", integ.step},
                 {"rtol", integ.rtol},
                 {"atol", integ.atol}};
  r["result"] = gramian_json(rep);
  out.curves.push_back(gramian_curve(rep));
  out.report_json = finish(r);
  return out;
}

RunResult run_reduce(const ParsedSystem& parsed, const json& j, uint64_t seed) {
  const LtvSystem& sys = parsed.system;
  const double horizon = read_horizon(j, parsed);
  const IntegratorSettings integ = read_integ(j);
  const CertGrid grid = read_cert_grid(j);
  const double tol = opt_number(j, "tol", 1e-3, true);
  const KChoice kc = resolve_k(parsed, j, horizon, integ, read_exponent_settings(j));
  const BlockPartition part{sys.n(), kc.k};
  if (part.n1() == 0 || part.n2() == 0)
    throw InvalidArgumentError("reduce needs a partition with two nonempty blocks");

  const double form_tol = 1e-9 * std::max(1.0, sys.bound_a());
  const bool triangular = is_upper_block_triangular(sys, kc.k, 0.0, horizon, form_tol);
  std::string route = opt_string(j, "route", triangular ? "triangular" : "symmetric");
  if (route != "triangular" && route != "symmetric")
    throw InvalidArgumentError("option 'route' must be \"triangular\" or \"symmetric\"");

  ReduceSettings rs;
  rs.integ = integ;
  rs.grid_dt = opt_number(j, "grid_dt", 0.0, true);
  const bool check_hypotheses = opt_bool(j, "check_hypotheses", true);

  json r = base_report(parsed, "reduce", seed);
  r["config"] = {{"horizon", horizon},
                 {"method", integ.method == Method::rk4 ? "rk4" : "adaptive"},
                 {"step", integ.step},
                 {"rtol", integ.rtol},
                 {"atol", integ.atol},
                 {"k", kc.k},
                 {"k_source", kc.source},
                 {"route", route},
                 {"tol", tol},
                 {"check_hypotheses", check_hypotheses},
                 {"grid", cert_grid_json(grid)}};

  RunResult out;
  json res;

  // Reduction hypotheses: the leading block is fully unstable (rank-0
  // projector) and the trailing block fully stable (full projector).
  bool hypotheses_ok = true;
  if (check_hypotheses) {
    json hyp;
    const CoefficientFunction zero_c;
    const LtvSystem lead(sys.a().block(0, 0, part.n1(), part.n1()), zero_c,
                         sys.name() + "-leading");
    const LtvSystem trail(sys.a().block(part.n1(), part.n1(), part.n2(), part.n2()), zero_c,
                          sys.name() + "-trailing");
    try {
      hyp["leading"] = dichotomy_json(certify_dichotomy(lead, 0, horizon, grid, tol, integ));
    } catch (const NumericError& e) {
      hyp["leading"] = {{"certified", false}, {"detail", e.what()}};
      hypotheses_ok = false;
    }
    try {
      hyp["trailing"] =
          dichotomy_json(certify_dichotomy(trail, part.n2(), horizon, grid, tol, integ));
    } catch (const NumericError& e) {
      hyp["trailing"] = {{"certified", false}, {"detail", e.what()}};
      hypotheses_ok = false;
    }
    res["hypotheses"] = std::move(hyp);
  }

  if (!hypotheses_ok) {
    res["reduced"] = false;
    res["detail"] = "block dichotomy hypotheses failed; reduction skipped";
  } else {
    ReductionResult red;
    if (route == "triangular") {
      const double t_trunc = opt_number(j, "t_trunc", 0.0, true);
      const double alpha_hint = opt_number(j, "alpha_hint", 1.0, true);
      red = triangular_reduction(sys, part, horizon, j.contains("t_trunc") ? t_trunc : 0.0,
                                 alpha_hint, rs);
    } else {
      red = coppel_transform(sys, part, horizon, rs);
    }
    res["reduced"] = true;
    res["reduction"] = reduction_json(red, route);
    out.curves.push_back(reduce_curve(red));
  }

  r["result"] = std::move(res);
  out.report_json = finish(r);
  return out;
}

RunResult run_observe(const ParsedSystem& parsed, const json& j, uint64_t seed) {
  const LtvSystem& sys = parsed.system;
  const double horizon = read_horizon(j, parsed);
  const IntegratorSettings integ = read_integ(j);
  const CertGrid grid = read_cert_grid(j);
  const double tol = opt_number(j, "tol", 1e-3, true);
  const double qw = opt_number(j, "qw", 1.0, true);
  const double rv = opt_number(j, "rv", 1.0, true);
  const KChoice kc = resolve_k(parsed, j, horizon, integ, read_exponent_settings(j));
  const int n = sys.n(), k = kc.k, n1 = n - k;
  const BlockPartition part{n, k};

  json r = base_report(parsed, "observe", seed);
  r["config"] = {{"horizon", horizon},
                 {"method", integ.method == Method::rk4 ? "rk4" : "adaptive"},
                 {"step", integ.step},
                 {"rtol", integ.rtol},
                 {"atol", integ.atol},
                 {"k", k},
                 {"k_source", kc.source},
                 {"qw", qw},
                 {"rv", rv},
                 {"tol", tol},
                 {"grid", cert_grid_json(grid)}};

  RunResult out;
  json res;
  res["k"] = k;

  CoefficientFunction l;
  CertGrid dg = grid;
  if (k == n) {
    // Uniformly exponentially stable block covers the whole state: zero gain.
    l = CoefficientFunction::zero(n, sys.p());
    res["gain_bound"] = 0.0;
    res["riccati"] = nullptr;
  } else {
    const double form_tol = 1e-9 * std::max(1.0, sys.bound_a());
    std::shared_ptr<QrFlowResult> flow = kc.flow;
    bool triangularized = false;
    LtvSystem work = sys;
    if (k > 0 && !is_upper_block_triangular(sys, k, 0.0, horizon, form_tol)) {
      if (!flow) {
        QrFlowSettings qs;
        qs.integ = integ;
        flow = std::make_shared<QrFlowResult>(
            run_qr_flow(sys, Matrix::Identity(n, n), 0.0, horizon, qs));
      }
      work = triangularized_system(sys, *flow);
      triangularized = true;
    }
    res["triangularized"] = triangularized;

    const CoefficientFunction b11 = work.a().block(0, 0, n1, n1);
    const CoefficientFunction c1 = work.c().block(0, 0, sys.p(), n1);

    RiccatiOptions ro;
    ro.qw = qw * Matrix::Identity(n1, n1);
    ro.rv = rv * Matrix::Identity(sys.p(), sys.p());
    ro.p0 = Matrix::Identity(n1, n1);
    RiccatiSolution ric;
    try {
      ric = solve_filter_riccati(b11, c1, ro, horizon, integ);
    } catch (const DivergenceError& e) {
      res["synthesized"] = false;
      res["detail"] = e.what();
      r["result"] = std::move(res);
      out.report_json = finish(r);
      return out;
    }
    res["riccati"] = {{"settle_time", ric.settle_time},
                      {"lambda_sup", ric.lambda_sup},
                      {"lambda_inf", ric.lambda_inf}};

    l = structured_gain(part, riccati_gain(ric, c1));
    if (triangularized) {
      std::vector<Matrix> vals(flow->grid.size());
      for (size_t i = 0; i < flow->grid.size(); ++i)
        vals[i] = flow->q[i] * l.eval(flow->grid[i]);
      l = CoefficientFunction::sampled(flow->grid, std::move(vals));
    }
    res["gain_bound"] = l.bound();
    dg.t0_min = std::max(dg.t0_min, std::min(ric.settle_time, horizon / 2.0));
  }

  const DecayCertificate decay = certify_error_decay(sys, l, horizon, dg, tol, integ);
  res["synthesized"] = true;
  res["decay"] = decay_json(decay);
  r["result"] = std::move(res);

  out.curves.push_back(gain_curve(l, horizon));
  out.curves.push_back(decay_curve(decay));
  out.report_json = finish(r);
  return out;
}

RunResult run_analyze(const ParsedSystem& parsed, const json& j, uint64_t seed) {
  const LtvSystem& sys = parsed.system;
  AnalyzeOptions ao;
  ao.horizon = read_horizon(j, parsed);
  ao.integ = read_integ(j);
  ao.seed = seed;
  if (j.contains("k")) {
    ao.pinned_k = opt_int(j, "k", 0);
    BlockPartition{sys.n(), *ao.pinned_k}.validate();
  }
  const std::string route = opt_string(j, "route", "triangular");
  if (route == "triangular")
    ao.route = Route::triangular;
  else if (route == "diagonal")
    ao.route = Route::diagonal;
  else
    throw InvalidArgumentError("option 'route' must be \"triangular\" or \"diagonal\"");
  ao.sigma_list = opt_number_list(j, "sigma_list", ao.sigma_list);
  for (double s : ao.sigma_list)
    if (!(s > 0.0)) throw InvalidArgumentError("option 'sigma_list' must be positive");
  ao.gramian_starts = opt_int(j, "starts", ao.gramian_starts);
  if (ao.gramian_starts < 1) throw InvalidArgumentError("option 'starts' must be at least 1");
  ao.beta1_threshold = opt_number(j, "threshold", ao.beta1_threshold);
  ao.cert_grid = read_cert_grid(j);
  ao.cert_tol = opt_number(j, "tol", ao.cert_tol, true);
  ao.exponents = read_exponent_settings(j);
  ao.qw_scale = opt_number(j, "qw", ao.qw_scale, true);
  ao.rv_scale = opt_number(j, "rv", ao.rv_scale, true);

  const DetectabilityReport rep = analyze(sys, ao);

  json r = base_report(parsed, "analyze", seed);
  r["config"] = {{"horizon", ao.horizon},
                 {"method", ao.integ.method == Method::rk4 ? "rk4" : "adaptive"},
                 {"step", ao.integ.step},
                 {"rtol", ao.integ.rtol},
                 {"atol", ao.integ.atol},
                 {"route", route},
                 {"k", ao.pinned_k ? json(*ao.pinned_k) : json(nullptr)},
                 {"sigma_list", ao.sigma_list},
                 {"starts", ao.gramian_starts},
                 {"threshold", ao.beta1_threshold},
                 {"tol", ao.cert_tol},
                 {"qw", ao.qw_scale},
                 {"rv", ao.rv_scale},
                 {"window", ao.exponents.window},
                 {"grid", cert_grid_json(ao.cert_grid)}};

  json res;
  res["verdict"] = to_string(rep.verdict);
  if (!rep.failed_stage.empty()) res["failed_stage"] = rep.failed_stage;
  if (!rep.detail.empty()) res["detail"] = rep.detail;
  res["k"] = rep.k;
  res["k_pinned"] = rep.k_pinned;
  res["triangularized"] = rep.triangularized;
  res["exponents"] = rep.exponents ? exponents_json(*rep.exponents) : json(nullptr);
  res["dichotomy"] = rep.dichotomy ? dichotomy_json(*rep.dichotomy) : json(nullptr);
  res["uco"] = rep.uco ? gramian_json(*rep.uco)
                       : (rep.uco_vacuous ? json{{"vacuous", true}, {"verdict", true}}
                                          : json(nullptr));
  res["uco_vacuous"] = rep.uco_vacuous;
  res["sigmas_tried"] = rep.sigmas_tried;
  if (rep.uco) res["sigma_used"] = rep.sigma_used;
  if (rep.riccati_settle) {
    res["riccati"] = {{"settle_time", *rep.riccati_settle},
                      {"lambda_sup", *rep.riccati_sup},
                      {"lambda_inf", *rep.riccati_inf}};
  } else {
    res["riccati"] = nullptr;
  }
  res["gain_bound"] = rep.gain_bound;
  res["decay"] = rep.decay ? decay_json(*rep.decay) : json(nullptr);
  if (rep.reduction) {
    res["reduction"] = reduction_json(*rep.reduction, "triangular");
    if (rep.ctilde2_bound) res["ctilde2_bound"] = *rep.ctilde2_bound;
    if (rep.c1_preservation) res["c1_preservation"] = *rep.c1_preservation;
  }
  if (!rep.reduction_note.empty()) res["reduction_note"] = rep.reduction_note;
  r["result"] = std::move(res);

  RunResult out;
  if (rep.flow) out.curves.push_back(qr_curve(*rep.flow));
  if (rep.gain) out.curves.push_back(gain_curve(*rep.gain, ao.horizon));
  if (rep.decay) out.curves.push_back(decay_curve(*rep.decay));
  if (rep.reduction) out.curves.push_back(reduce_curve(*rep.reduction));
  out.report_json = finish(r);
  return out;
}

}  // namespace

RunResult run_operation(const ParsedSystem& parsed, const std::string& op,
                        const std::string& options_json) {
  static constexpr const char* kCommon[] = {"horizon", "method", "step", "rtol", "atol", "seed"};
  auto with_common = [](std::initializer_list<const char*> extra) {
    std::vector<const char*> all(std::begin(kCommon), std::end(kCommon));
    all.insert(all.end(), extra.begin(), extra.end());
    return all;
  };
  auto parse = [&](std::initializer_list<const char*> extra) {
    const auto allowed = with_common(extra);
    json j;
    if (options_json.empty()) return json::object();
    try {
      j = json::parse(options_json);
    } catch (const json::parse_error& e) {
      throw InvalidArgumentError(std::string("options: not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw InvalidArgumentError("options must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || it.key() == a;
      if (!ok) throw InvalidArgumentError("unknown option '" + it.key() + "' for op '" + op + "'");
    }
    return j;
  };

  if (op == "qr") {
    const json j = parse({"window", "gap_delta"});
    return run_qr(parsed, j, opt_seed(j));
  }
  if (op == "dichotomy") {
    const json j = parse({"k", "tol", "t0_count", "gaps", "t0_min", "window", "gap_delta"});
    return run_dichotomy(parsed, j, opt_seed(j));
  }
  if (op == "gramian") {
    const json j = parse({"sigma", "starts", "threshold", "t0", "t1"});
    return run_gramian(parsed, j, opt_seed(j));
  }
  if (op == "reduce") {
    const json j = parse({"k", "route", "t_trunc", "alpha_hint", "grid_dt", "tol", "t0_count",
                          "gaps", "t0_min", "window", "gap_delta", "check_hypotheses"});
    return run_reduce(parsed, j, opt_seed(j));
  }
  if (op == "observe") {
    const json j =
        parse({"k", "qw", "rv", "tol", "t0_count", "gaps", "t0_min", "window", "gap_delta"});
    return run_observe(parsed, j, opt_seed(j));
  }
  if (op == "analyze") {
    const json j = parse({"k", "route", "sigma_list", "starts", "threshold", "tol", "t0_count",
                          "gaps", "t0_min", "window", "gap_delta", "qw", "rv"});
    return run_analyze(parsed, j, opt_seed(j));
  }
  throw InvalidArgumentError("unknown op '" + op +
                             "' (expected qr, dichotomy, gramian, reduce, observe, or analyze)");
}

}  // namespace ltvdet
