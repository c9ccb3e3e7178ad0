#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "core/errors.hpp"
#include "core/runner.hpp"
#include "core/sysfile.hpp"

using namespace ltvdet;
using nlohmann::json;

namespace {

ParsedSystem example(const char* name) { return parse_system_json(bundled_example_json(name)); }

json report_of(const RunResult& r) { return json::parse(r.report_json); }

const NamedCurve* find_curve(const RunResult& r, const std::string& name) {
  for (const auto& c : r.curves)
    if (c.name == name) return &c;
  return nullptr;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

long line_count(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

std::string thrown_message(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

bool contains(const std::string& text, const std::string& needle) {
  return text.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("runner: analyze emits a schema-versioned report with flow, gain, decay curves") {
  const RunResult out = run_operation(example("saddle_observed"), "analyze", "");
  const json r = report_of(out);

  CHECK(r["schema"] == "ltvdet.report/1");
  CHECK(r["tool"]["name"] == "ltvdet");
  CHECK(r["tool"]["version"] == "0.1.0");
  CHECK(r["op"] == "analyze");
  CHECK(r["seed"] == 0);
  CHECK(r["system"]["name"] == "saddle_observed");
  CHECK(r["system"]["n"] == 2);
  CHECK(r["system"]["p"] == 1);
  CHECK(r["system"]["tmax"].get<double>() == doctest::Approx(50.0));
  CHECK(r["meta"].contains("generated_at"));

  const json& res = r["result"];
  CHECK(res["verdict"] == "detectable");
  CHECK(res["k"] == 1);
  CHECK(res["k_pinned"] == false);
  CHECK(res["dichotomy"]["alpha"].get<double>() > 0.9);
  CHECK(res["uco"]["uco"] == true);
  CHECK(res["decay"]["valid"] == true);
  CHECK(res["decay"]["mu"].get<double>() > 0.9);

  REQUIRE(out.curves.size() == 3);
  const NamedCurve* flow = find_curve(out, "qr_flow");
  REQUIRE(flow != nullptr);
  CHECK(first_line(flow->csv) == "t,nu1,nu2,bdiag1,bdiag2,ortho_residual");
  CHECK(line_count(flow->csv) > 10);
  const NamedCurve* gain = find_curve(out, "gain");
  REQUIRE(gain != nullptr);
  CHECK(first_line(gain->csv) == "t,l11,l21");
  const NamedCurve* decay = find_curve(out, "decay");
  REQUIRE(decay != nullptr);
  CHECK(first_line(decay->csv) == "t0,gap,norm");
}

TEST_CASE("runner: analyze echoes the seed and the diagonal route adds the reduction") {
  const RunResult out =
      run_operation(example("saddle_observed"), "analyze", R"({"seed": 7, "route": "diagonal"})");
  const json r = report_of(out);
  CHECK(r["seed"] == 7);
  CHECK(r["config"]["route"] == "diagonal");

  const json& res = r["result"];
  CHECK(res["verdict"] == "detectable");
  REQUIRE(res.contains("reduction"));
  CHECK(res["reduction"]["route"] == "triangular");
  CHECK(res["reduction"]["max_offdiag"].get<double>() < 1e-6);
  CHECK(res.contains("ctilde2_bound"));
  CHECK(res["ctilde2_bound"].get<double>() < 1e-6);

  CHECK(out.curves.size() == 4);
  REQUIRE(find_curve(out, "reduce") != nullptr);
  CHECK(first_line(find_curve(out, "reduce")->csv) == "t,s_norm,sinv_norm,offdiag");
}

TEST_CASE("runner: dichotomy takes k from the bundled partition and certifies the saddle") {
  const RunResult out = run_operation(example("saddle_observed"), "dichotomy", "");
  const json r = report_of(out);
  CHECK(r["config"]["k"] == 1);
  CHECK(r["config"]["k_source"] == "partition");

  const json& res = r["result"];
  REQUIRE(res["certified"] == true);
  CHECK(res["certificate"]["alpha"].get<double>() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(res["certificate"]["kappa"].get<double>() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(res["certificate"]["projector_route"] == "normal-form");

  REQUIRE(out.curves.size() == 1);
  CHECK(out.curves[0].name == "decay");
  CHECK(first_line(out.curves[0].csv) == "t0,gap,norm,side");
}

TEST_CASE("runner: dichotomy reports a failed certification as an outcome, not an error") {
  const RunResult out = run_operation(example("saddle_observed"), "dichotomy", R"({"k": 2})");
  const json r = report_of(out);
  CHECK(r["config"]["k_source"] == "option");

  const json& res = r["result"];
  CHECK(res["certified"] == false);
  CHECK(res["detail"].get<std::string>().size() > 0);
  CHECK(out.curves.empty());
}

TEST_CASE("runner: gramian over an explicit interval returns matrix and eigenvalues") {
  const ParsedSystem scalar = parse_system_json(R"({
    "n": 1, "p": 1, "tmax": 10.0,
    "a": {"kind": "constant", "value": [[0.0]]},
    "c": {"kind": "constant", "value": [[1.0]]}
  })");
  const RunResult out = run_operation(scalar, "gramian", R"({"t0": 1.0, "t1": 3.0})");
  const json r = report_of(out);
  CHECK(r["config"]["t0"].get<double>() == doctest::Approx(1.0));
  CHECK(r["config"]["t1"].get<double>() == doctest::Approx(3.0));

  const json& res = r["result"];
  CHECK(res["gramian"][0][0].get<double>() == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(res["lambda_min"].get<double>() == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(res["lambda_max"].get<double>() == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(out.curves.empty());

  CHECK_THROWS_AS(run_operation(scalar, "gramian", R"({"t0": 2.0, "t1": 2.0})"),
                  InvalidArgumentError);
}

TEST_CASE("runner: gramian sweep reports uniform observability with one curve row per start") {
  const RunResult out = run_operation(example("triu_constant"), "gramian",
                                      R"({"sigma": 1.0, "starts": 8, "horizon": 12.0})");
  const json r = report_of(out);
  const json& res = r["result"];
  CHECK(res["uco"] == true);
  CHECK(res["beta1"].get<double>() > 0.0);
  CHECK(res["beta2"].get<double>() >= res["beta1"].get<double>());
  CHECK(res["starts"].size() == 8);

  REQUIRE(out.curves.size() == 1);
  CHECK(out.curves[0].name == "gramian");
  CHECK(first_line(out.curves[0].csv) == "t0,lambda_min,lambda_max");
  CHECK(line_count(out.curves[0].csv) == 9);
}

TEST_CASE("runner: qr reports flow diagnostics and leaves marginal exponents unresolved") {
  const RunResult out = run_operation(example("rotation"), "qr", R"({"horizon": 20.0})");
  const json r = report_of(out);
  CHECK(r["op"] == "qr");
  CHECK(r["config"]["horizon"].get<double>() == doctest::Approx(20.0));

  const json& res = r["result"];
  CHECK(res["max_ortho_residual"].get<double>() < 1e-8);
  CHECK(res["max_lower_residual"].get<double>() < 1e-8);
  CHECK(res["exponents"]["has_marginal"] == true);
  CHECK(res["exponents"]["proposed_k"].is_null());

  REQUIRE(out.curves.size() == 1);
  CHECK(out.curves[0].name == "qr_flow");
  CHECK(first_line(out.curves[0].csv) == "t,nu1,nu2,bdiag1,bdiag2,ortho_residual");
}

TEST_CASE("runner: reduce certifies block hypotheses and returns the reduction summary") {
  const RunResult out =
      run_operation(example("triu_constant"), "reduce",
                    R"({"horizon": 10.0, "grid_dt": 0.01, "gaps": [0.5, 1.0, 2.0]})");
  const json r = report_of(out);
  CHECK(r["config"]["route"] == "triangular");
  CHECK(r["config"]["k_source"] == "partition");

  const json& res = r["result"];
  REQUIRE(res["reduced"] == true);
  CHECK(res["hypotheses"]["leading"]["k"] == 0);
  CHECK(res["hypotheses"]["leading"]["alpha"].get<double>() > 0.9);
  CHECK(res["hypotheses"]["trailing"]["k"] == 1);

  const json& red = res["reduction"];
  CHECK(red["route"] == "triangular");
  CHECK(red["n"] == 2);
  CHECK(red["k"] == 1);
  CHECK(red["t_trunc"].get<double>() == doctest::Approx(20.0));
  CHECK(red["sup_s"].get<double>() == doctest::Approx(1.2030).epsilon(1e-3));
  CHECK(red["sup_sinv"].get<double>() == doctest::Approx(1.3454).epsilon(1e-3));
  CHECK(red["max_offdiag"].get<double>() < 1e-6);

  REQUIRE(out.curves.size() == 1);
  CHECK(out.curves[0].name == "reduce");
  CHECK(first_line(out.curves[0].csv) == "t,s_norm,sinv_norm,offdiag");
}

TEST_CASE("runner: observe synthesizes a scalar observer and certifies its decay") {
  const ParsedSystem scalar = parse_system_json(R"({
    "name": "scalar-antistable",
    "n": 1, "p": 1, "tmax": 30.0,
    "a": {"kind": "constant", "value": [[1.0]]},
    "c": {"kind": "constant", "value": [[1.0]]}
  })");
  const RunResult out =
      run_operation(scalar, "observe", R"({"horizon": 20.0, "gaps": [0.5, 1.0, 2.0, 4.0]})");
  const json r = report_of(out);
  CHECK(r["config"]["k_source"] == "exponents");

  const json& res = r["result"];
  CHECK(res["k"] == 0);
  CHECK(res["synthesized"] == true);
  CHECK(res["triangularized"] == false);
  // Stationary Riccati value for (a, c, qw, rv) = (1, 1, 1, 1) is 1 + sqrt(2).
  CHECK(res["riccati"]["lambda_sup"].get<double>() ==
        doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-3));
  CHECK(res["gain_bound"].get<double>() > 2.0);
  CHECK(res["decay"]["valid"] == true);
  const double mu = res["decay"]["mu"].get<double>();
  CHECK(mu > 1.40);
  CHECK(mu < 1.42);

  REQUIRE(out.curves.size() == 2);
  const NamedCurve* gain = find_curve(out, "gain");
  REQUIRE(gain != nullptr);
  CHECK(first_line(gain->csv) == "t,l11");
  CHECK(find_curve(out, "decay") != nullptr);
}

TEST_CASE("runner: observe reports riccati divergence as an outcome, not an error") {
  const RunResult out = run_operation(example("antistable_blind"), "observe", "");
  const json r = report_of(out);
  const json& res = r["result"];
  CHECK(res["synthesized"] == false);
  CHECK(res["detail"].get<std::string>().size() > 0);
  CHECK(!res.contains("decay"));
  CHECK(out.curves.empty());
}

TEST_CASE("runner: op and option validation") {
  const ParsedSystem sys = example("saddle_observed");

  CHECK_THROWS_AS(run_operation(sys, "frobnicate", ""), InvalidArgumentError);
  CHECK(contains(thrown_message([&] { run_operation(sys, "frobnicate", ""); }),
                 "unknown op 'frobnicate'"));

  CHECK(contains(thrown_message([&] { run_operation(sys, "qr", R"({"sigma": 1.0})"); }),
                 "unknown option 'sigma' for op 'qr'"));
  CHECK(contains(thrown_message([&] { run_operation(sys, "qr", "[1, 2]"); }),
                 "options must be a JSON object"));
  CHECK(contains(thrown_message([&] { run_operation(sys, "qr", "{nope"); }),
                 "not valid JSON"));
  CHECK(contains(thrown_message([&] { run_operation(sys, "qr", R"({"method": "euler"})"); }),
                 "option 'method'"));
  CHECK(contains(thrown_message([&] { run_operation(sys, "qr", R"({"seed": -3})"); }),
                 "option 'seed' must be a non-negative integer"));

  CHECK(contains(thrown_message([&] { run_operation(sys, "dichotomy", R"({"t0_count": 1})"); }),
                 "option 't0_count' must be at least 2"));
  CHECK(contains(thrown_message([&] { run_operation(sys, "dichotomy", R"({"gaps": "wide"})"); }),
                 "option 'gaps' must be an array of numbers"));
  CHECK(contains(thrown_message([&] { run_operation(sys, "dichotomy", R"({"gaps": []})"); }),
                 "option 'gaps' must not be empty"));
  CHECK(contains(
      thrown_message([&] { run_operation(sys, "dichotomy", R"({"gaps": [1.0, -2.0]})"); }),
      "option 'gaps' must be positive"));
  CHECK(contains(thrown_message([&] { run_operation(sys, "dichotomy", R"({"tol": "tight"})"); }),
                 "option 'tol' must be a number"));
  CHECK(contains(thrown_message([&] { run_operation(sys, "dichotomy", R"({"tol": 0.0})"); }),
                 "option 'tol' must be positive"));

  CHECK(contains(thrown_message([&] { run_operation(sys, "gramian", R"({"sigma": 60.0})"); }),
                 "option 'sigma' must be smaller than the horizon"));
  CHECK(contains(thrown_message([&] { run_operation(sys, "gramian", R"({"starts": 0})"); }),
                 "option 'starts' must be at least 1"));

  CHECK(contains(thrown_message([&] { run_operation(sys, "reduce", R"({"route": "fancy"})"); }),
                 "option 'route' must be \"triangular\" or \"symmetric\""));
  CHECK(contains(
      thrown_message([&] { run_operation(sys, "reduce", R"({"check_hypotheses": 1})"); }),
      "option 'check_hypotheses' must be a boolean"));

  CHECK(contains(thrown_message([&] { run_operation(sys, "analyze", R"({"route": "diag"})"); }),
                 "option 'route' must be \"triangular\" or \"diagonal\""));
  CHECK(contains(
      thrown_message([&] { run_operation(sys, "analyze", R"({"sigma_list": [1.0, -1.0]})"); }),
      "option 'sigma_list' must be positive"));
  CHECK_THROWS_AS(run_operation(sys, "analyze", R"({"k": 5})"), DimensionError);
}
