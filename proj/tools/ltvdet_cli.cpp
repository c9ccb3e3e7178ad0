// Command-line front end over the ltvdet C API: loads a system definition,
// dispatches one analysis op, prints the JSON report to stdout, and writes
// report.json plus CSV curve sidecars to the output directory.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ltvdet/ltvdet.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonFlags {
  std::string system_path;
  std::string example_name;
  std::string out_dir;
  double horizon = 0.0;
  double step = 0.0;
  double rtol = 0.0;
  double atol = 0.0;
  std::string method;
  uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  auto* sys = cmd->add_option("-s,--system", f.system_path, "System definition file (JSON)");
  auto* ex = cmd->add_option("-e,--example", f.example_name, "Bundled example system by name");
  sys->excludes(ex);
  const char* env_dir = std::getenv("LTVDET_OUT_DIR");
  f.out_dir = env_dir ? env_dir : ".";
  cmd->add_option("-o,--out", f.out_dir, "Output directory for report.json and CSV curves");
  cmd->add_option("--horizon", f.horizon, "Analysis horizon T");
  cmd->add_option("--step", f.step, "Fixed integrator step (0 = automatic)");
  cmd->add_option("--rtol", f.rtol, "Adaptive relative tolerance");
  cmd->add_option("--atol", f.atol, "Adaptive absolute tolerance");
  cmd->add_option("--method", f.method, "Integrator: rk4 or adaptive")
      ->check(CLI::IsMember({"rk4", "adaptive"}));
  cmd->add_option("--seed", f.seed, "Seed recorded in the report");
}

// Only forwards flags the user actually set, so defaults live in one place.
json common_options(const CLI::App* cmd, const CommonFlags& f) {
  json j = json::object();
  if (cmd->count("--horizon")) j["horizon"] = f.horizon;
  if (cmd->count("--step")) j["step"] = f.step;
  if (cmd->count("--rtol")) j["rtol"] = f.rtol;
  if (cmd->count("--atol")) j["atol"] = f.atol;
  if (cmd->count("--method")) j["method"] = f.method;
  if (cmd->count("--seed")) j["seed"] = f.seed;
  return j;
}

int fail_with(ltvdet_status status, const std::string& context) {
  std::cerr << "ltvdet-cli: " << context << ": " << ltvdet_last_error() << "\n";
  return static_cast<int>(status);
}

int load_system(const CommonFlags& f, ltvdet_system** out) {
  if (!f.system_path.empty()) {
    const ltvdet_status st = ltvdet_system_from_file(f.system_path.c_str(), out);
    if (st != LTVDET_OK) return fail_with(st, "loading " + f.system_path);
    return 0;
  }
  if (!f.example_name.empty()) {
    const char* text = ltvdet_example_json(f.example_name.c_str());
    if (!text) {
      std::cerr << "ltvdet-cli: unknown example '" << f.example_name << "'; available:";
      for (int i = 0; i < ltvdet_example_count(); ++i)
        std::cerr << " " << ltvdet_example_name(i);
      std::cerr << "\n";
      return static_cast<int>(LTVDET_ERR_INVALID_ARGUMENT);
    }
    const ltvdet_status st = ltvdet_system_from_json(text, out);
    if (st != LTVDET_OK) return fail_with(st, "parsing example " + f.example_name);
    return 0;
  }
  std::cerr << "ltvdet-cli: one of --system or --example is required\n";
  return static_cast<int>(LTVDET_ERR_INVALID_ARGUMENT);
}

int write_outputs(const CommonFlags& f, const ltvdet_result* res) {
  std::error_code ec;
  fs::create_directories(f.out_dir, ec);
  if (ec) {
    std::cerr << "ltvdet-cli: cannot create output directory '" << f.out_dir << "': "
              << ec.message() << "\n";
    return static_cast<int>(LTVDET_ERR_IO);
  }
  const char* report = ltvdet_result_report_json(res);
  std::cout << report;

  {
    std::ofstream out(fs::path(f.out_dir) / "report.json", std::ios::binary);
    out << report;
    if (!out) {
      std::cerr << "ltvdet-cli: cannot write report.json in '" << f.out_dir << "'\n";
      return static_cast<int>(LTVDET_ERR_IO);
    }
  }
  for (int i = 0; i < ltvdet_result_curve_count(res); ++i) {
    const std::string name = ltvdet_result_curve_name(res, i);
    std::ofstream out(fs::path(f.out_dir) / (name + ".csv"), std::ios::binary);
    out << ltvdet_result_curve_csv(res, i);
    if (!out) {
      std::cerr << "ltvdet-cli: cannot write " << name << ".csv in '" << f.out_dir << "'\n";
      return static_cast<int>(LTVDET_ERR_IO);
    }
  }
  return 0;
}

int run_op(const CommonFlags& f, const std::string& op, const json& options) {
  ltvdet_system* sys = nullptr;
  if (int rc = load_system(f, &sys)) return rc;

  ltvdet_result* res = nullptr;
  const std::string options_text = options.dump();
  const ltvdet_status st = ltvdet_run(sys, op.c_str(), options_text.c_str(), &res);
  if (st != LTVDET_OK) {
    ltvdet_system_free(sys);
    return fail_with(st, "op " + op);
  }
  const int rc = write_outputs(f, res);
  ltvdet_result_free(res);
  ltvdet_system_free(sys);
  return rc;
}

int materialize_examples(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    std::cerr << "ltvdet-cli: cannot create '" << dir << "': " << ec.message() << "\n";
    return static_cast<int>(LTVDET_ERR_IO);
  }
  for (int i = 0; i < ltvdet_example_count(); ++i) {
    const std::string name = ltvdet_example_name(i);
    std::ofstream out(fs::path(dir) / (name + ".json"), std::ios::binary);
    out << ltvdet_example_json(name.c_str());
    if (!out) {
      std::cerr << "ltvdet-cli: cannot write " << name << ".json\n";
      return static_cast<int>(LTVDET_ERR_IO);
    }
    std::cout << name << ".json\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("ltvdet ") + ltvdet_version() +
               ": detectability analysis for linear time-varying systems"};
  app.require_subcommand(0, 1);

  std::string examples_dir;
  app.add_option("--examples", examples_dir,
                 "Write the bundled example system files into a directory and exit");

  // qr ----------------------------------------------------------------
  auto* qr = app.add_subcommand("qr", "Triangularizing QR flow: nu_i(t), diag B(t), residuals");
  CommonFlags qr_f;
  add_common(qr, qr_f);
  double qr_window = 0.0;
  qr->add_option("--window", qr_window, "Steklov averaging window for the rate estimate");

  // dichotomy -----------------------------------------------------------
  auto* dich = app.add_subcommand("dichotomy", "Certify an exponential dichotomy (K, alpha)");
  CommonFlags dich_f;
  add_common(dich, dich_f);
  int dich_k = 0;
  double dich_tol = 0.0, dich_t0_min = 0.0;
  int dich_t0_count = 0;
  std::vector<double> dich_gaps;
  dich->add_option("-k,--k", dich_k, "Stable-block dimension (default: file partition or proposal)");
  dich->add_option("--tol", dich_tol, "Envelope residual tolerance");
  dich->add_option("--t0-count", dich_t0_count, "Certification starts per gap");
  dich->add_option("--gap", dich_gaps, "Certification gap (repeatable)");
  dich->add_option("--t0-min", dich_t0_min, "Earliest certification start");

  // gramian -------------------------------------------------------------
  auto* gram = app.add_subcommand("gramian", "Observability Gramian eigenvalue bounds / UCO check");
  CommonFlags gram_f;
  add_common(gram, gram_f);
  double gram_sigma = 0.0, gram_threshold = 0.0, gram_t0 = 0.0, gram_t1 = 0.0;
  int gram_starts = 0;
  gram->add_option("--sigma", gram_sigma, "Window length for the UCO sweep");
  gram->add_option("--starts", gram_starts, "Number of window starts");
  gram->add_option("--threshold", gram_threshold, "beta1 verdict threshold");
  auto* g_t0 = gram->add_option("--t0", gram_t0, "Single-interval Gramian: start");
  auto* g_t1 = gram->add_option("--t1", gram_t1, "Single-interval Gramian: end");
  g_t1->needs(g_t0);

  // reduce --------------------------------------------------------------
  auto* red = app.add_subcommand("reduce", "Block-diagonalizing change of variables");
  CommonFlags red_f;
  add_common(red, red_f);
  int red_k = 0;
  std::string red_route;
  double red_t_trunc = 0.0, red_alpha_hint = 0.0, red_grid_dt = 0.0, red_tol = 0.0;
  bool red_no_hyp = false;
  red->add_option("-k,--k", red_k, "Stable-block dimension");
  red->add_option("--route", red_route, "triangular or symmetric")
      ->check(CLI::IsMember({"triangular", "symmetric"}));
  red->add_option("--t-trunc", red_t_trunc, "Truncation horizon for the coupling sweep");
  red->add_option("--alpha-hint", red_alpha_hint, "Decay-rate hint for the default t_trunc");
  red->add_option("--grid-dt", red_grid_dt, "Output grid spacing");
  red->add_option("--tol", red_tol, "Hypothesis-certificate tolerance");
  red->add_flag("--no-hypotheses", red_no_hyp, "Skip the block dichotomy certificates");

  // observe -------------------------------------------------------------
  auto* obs = app.add_subcommand("observe", "Synthesize the observer gain and certify decay");
  CommonFlags obs_f;
  add_common(obs, obs_f);
  int obs_k = 0;
  double obs_qw = 0.0, obs_rv = 0.0, obs_tol = 0.0, obs_t0_min = 0.0;
  int obs_t0_count = 0;
  std::vector<double> obs_gaps;
  obs->add_option("-k,--k", obs_k, "Stable-block dimension");
  obs->add_option("--qw", obs_qw, "Process weight scale (Qw = qw I)");
  obs->add_option("--rv", obs_rv, "Output weight scale (Rv = rv I)");
  obs->add_option("--tol", obs_tol, "Decay-envelope residual tolerance");
  obs->add_option("--t0-count", obs_t0_count, "Decay starts per gap");
  obs->add_option("--gap", obs_gaps, "Decay gap (repeatable)");
  obs->add_option("--t0-min", obs_t0_min, "Earliest decay start");

  // analyze -------------------------------------------------------------
  auto* ana = app.add_subcommand("analyze", "Full detectability pipeline");
  CommonFlags ana_f;
  add_common(ana, ana_f);
  int ana_k = 0;
  std::string ana_route;
  std::vector<double> ana_sigmas, ana_gaps;
  int ana_starts = 0, ana_t0_count = 0;
  double ana_threshold = 0.0, ana_tol = 0.0, ana_qw = 0.0, ana_rv = 0.0;
  double ana_window = 0.0, ana_t0_min = 0.0;
  ana->add_option("-k,--k", ana_k, "Pin the stable-block dimension");
  ana->add_option("--route", ana_route, "triangular or diagonal")
      ->check(CLI::IsMember({"triangular", "diagonal"}));
  ana->add_option("--sigma", ana_sigmas, "UCO window candidate (repeatable, ascending)");
  ana->add_option("--starts", ana_starts, "Gramian window starts");
  ana->add_option("--threshold", ana_threshold, "beta1 verdict threshold");
  ana->add_option("--tol", ana_tol, "Certification residual tolerance");
  ana->add_option("--qw", ana_qw, "Process weight scale");
  ana->add_option("--rv", ana_rv, "Output weight scale");
  ana->add_option("--window", ana_window, "Steklov averaging window");
  ana->add_option("--t0-count", ana_t0_count, "Certification starts per gap");
  ana->add_option("--gap", ana_gaps, "Certification gap (repeatable)");
  ana->add_option("--t0-min", ana_t0_min, "Earliest certification start");

  CLI11_PARSE(app, argc, argv);

  if (!examples_dir.empty()) return materialize_examples(examples_dir);

  if (qr->parsed()) {
    json j = common_options(qr, qr_f);
    if (qr->count("--window")) j["window"] = qr_window;
    return run_op(qr_f, "qr", j);
  }
  if (dich->parsed()) {
    json j = common_options(dich, dich_f);
    if (dich->count("--k")) j["k"] = dich_k;
    if (dich->count("--tol")) j["tol"] = dich_tol;
    if (dich->count("--t0-count")) j["t0_count"] = dich_t0_count;
    if (dich->count("--gap")) j["gaps"] = dich_gaps;
    if (dich->count("--t0-min")) j["t0_min"] = dich_t0_min;
    return run_op(dich_f, "dichotomy", j);
  }
  if (gram->parsed()) {
    json j = common_options(gram, gram_f);
    if (gram->count("--sigma")) j["sigma"] = gram_sigma;
    if (gram->count("--starts")) j["starts"] = gram_starts;
    if (gram->count("--threshold")) j["threshold"] = gram_threshold;
    if (gram->count("--t0")) j["t0"] = gram_t0;
    if (gram->count("--t1")) j["t1"] = gram_t1;
    return run_op(gram_f, "gramian", j);
  }
  if (red->parsed()) {
    json j = common_options(red, red_f);
    if (red->count("--k")) j["k"] = red_k;
    if (red->count("--route")) j["route"] = red_route;
    if (red->count("--t-trunc")) j["t_trunc"] = red_t_trunc;
    if (red->count("--alpha-hint")) j["alpha_hint"] = red_alpha_hint;
    if (red->count("--grid-dt")) j["grid_dt"] = red_grid_dt;
    if (red->count("--tol")) j["tol"] = red_tol;
    if (red_no_hyp) j["check_hypotheses"] = false;
    return run_op(red_f, "reduce", j);
  }
  if (obs->parsed()) {
    json j = common_options(obs, obs_f);
    if (obs->count("--k")) j["k"] = obs_k;
    if (obs->count("--qw")) j["qw"] = obs_qw;
    if (obs->count("--rv")) j["rv"] = obs_rv;
    if (obs->count("--tol")) j["tol"] = obs_tol;
    if (obs->count("--t0-count")) j["t0_count"] = obs_t0_count;
    if (obs->count("--gap")) j["gaps"] = obs_gaps;
    if (obs->count("--t0-min")) j["t0_min"] = obs_t0_min;
    return run_op(obs_f, "observe", j);
  }
  if (ana->parsed()) {
    json j = common_options(ana, ana_f);
    if (ana->count("--k")) j["k"] = ana_k;
    if (ana->count("--route")) j["route"] = ana_route;
    if (ana->count("--sigma")) j["sigma_list"] = ana_sigmas;
    if (ana->count("--starts")) j["starts"] = ana_starts;
    if (ana->count("--threshold")) j["threshold"] = ana_threshold;
    if (ana->count("--tol")) j["tol"] = ana_tol;
    if (ana->count("--qw")) j["qw"] = ana_qw;
    if (ana->count("--rv")) j["rv"] = ana_rv;
    if (ana->count("--window")) j["window"] = ana_window;
    if (ana->count("--t0-count")) j["t0_count"] = ana_t0_count;
    if (ana->count("--gap")) j["gaps"] = ana_gaps;
    if (ana->count("--t0-min")) j["t0_min"] = ana_t0_min;
    return run_op(ana_f, "analyze", j);
  }

  std::cout << app.help();
  return 0;
}
