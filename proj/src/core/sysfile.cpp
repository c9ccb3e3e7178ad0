#include "sysfile.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"

namespace ltvdet {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ParseError("field '" + field + "': " + why);
}

Matrix parse_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) fail(field, "must be a non-empty array of rows");
  const size_t rows = j.size();
  size_t cols = 0;
  for (size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].empty()) fail(field, "row " + std::to_string(r) + " must be a non-empty array");
    if (r == 0)
      cols = j[r].size();
    else if (j[r].size() != cols)
      fail(field, "rows differ in length");
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) fail(field, "entry (" + std::to_string(r) + "," + std::to_string(c) + ") must be a number");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  return m;
}

std::vector<double> parse_number_list(const json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : j) {
    if (!e.is_number()) fail(field, "must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

void check_keys(const json& j, const std::string& field, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) fail(field.empty() ? it.key() : field + "." + it.key(), "unknown key");
  }
}

CoefficientFunction parse_coefficient(const json& j, const std::string& field) {
  if (!j.is_object()) fail(field, "must be an object with a 'kind'");
  if (!j.contains("kind") || !j["kind"].is_string()) fail(field + ".kind", "must be a string");
  const std::string kind = j["kind"].get<std::string>();

  if (kind == "constant") {
    check_keys(j, field, {"kind", "value"});
    if (!j.contains("value")) fail(field + ".value", "required for constant coefficients");
    return CoefficientFunction::constant(parse_matrix(j["value"], field + ".value"));
  }

  if (kind == "periodic") {
    check_keys(j, field, {"kind", "offset", "terms"});
    if (!j.contains("offset")) fail(field + ".offset", "required for periodic coefficients");
    Matrix offset = parse_matrix(j["offset"], field + ".offset");
    std::vector<TrigTerm> terms;
    if (j.contains("terms")) {
      if (!j["terms"].is_array()) fail(field + ".terms", "must be an array");
      size_t idx = 0;
      for (const auto& tj : j["terms"]) {
        const std::string tf = field + ".terms[" + std::to_string(idx++) + "]";
        if (!tj.is_object()) fail(tf, "must be an object");
        check_keys(tj, tf, {"row", "col", "amplitude", "frequency", "phase", "function"});
        TrigTerm term;
        if (!tj.contains("row") || !tj["row"].is_number_integer()) fail(tf + ".row", "must be an integer");
        if (!tj.contains("col") || !tj["col"].is_number_integer()) fail(tf + ".col", "must be an integer");
        term.row = tj["row"].get<int>();
        term.col = tj["col"].get<int>();
        if (!tj.contains("amplitude") || !tj["amplitude"].is_number())
          fail(tf + ".amplitude", "must be a number");
        term.amplitude = tj["amplitude"].get<double>();
        if (tj.contains("frequency")) {
          if (!tj["frequency"].is_number()) fail(tf + ".frequency", "must be a number");
          term.frequency = tj["frequency"].get<double>();
        }
        if (tj.contains("phase")) {
          if (!tj["phase"].is_number()) fail(tf + ".phase", "must be a number");
          term.phase = tj["phase"].get<double>();
        }
        if (tj.contains("function")) {
          if (!tj["function"].is_string()) fail(tf + ".function", "must be \"sin\" or \"cos\"");
          const std::string fn = tj["function"].get<std::string>();
          if (fn == "sin")
            term.use_sin = true;
          else if (fn == "cos")
            term.use_sin = false;
          else
            fail(tf + ".function", "must be \"sin\" or \"cos\"");
        }
        terms.push_back(term);
      }
    }
    return CoefficientFunction::periodic(std::move(offset), std::move(terms));
  }

  if (kind == "piecewise") {
    check_keys(j, field, {"kind", "breakpoints", "values"});
    if (!j.contains("values") || !j["values"].is_array())
      fail(field + ".values", "required for piecewise coefficients");
    std::vector<double> breaks;
    if (j.contains("breakpoints")) breaks = parse_number_list(j["breakpoints"], field + ".breakpoints");
    std::vector<Matrix> values;
    size_t idx = 0;
    for (const auto& vj : j["values"])
      values.push_back(parse_matrix(vj, field + ".values[" + std::to_string(idx++) + "]"));
    return CoefficientFunction::piecewise(std::move(breaks), std::move(values));
  }

  if (kind == "sampled") {
    check_keys(j, field, {"kind", "times", "t0", "dt", "values"});
    if (!j.contains("values") || !j["values"].is_array())
      fail(field + ".values", "required for sampled coefficients");
    std::vector<Matrix> values;
    size_t idx = 0;
    for (const auto& vj : j["values"])
      values.push_back(parse_matrix(vj, field + ".values[" + std::to_string(idx++) + "]"));
    std::vector<double> times;
    if (j.contains("times")) {
      times = parse_number_list(j["times"], field + ".times");
    } else {
      if (!j.contains("t0") || !j["t0"].is_number()) fail(field + ".t0", "required (with 'dt') when 'times' is absent");
      if (!j.contains("dt") || !j["dt"].is_number()) fail(field + ".dt", "required (with 't0') when 'times' is absent");
      const double t0 = j["t0"].get<double>(), dt = j["dt"].get<double>();
      if (!(dt > 0.0)) fail(field + ".dt", "must be positive");
      for (size_t i = 0; i < values.size(); ++i) times.push_back(t0 + dt * static_cast<double>(i));
    }
    return CoefficientFunction::sampled(std::move(times), std::move(values));
  }

  fail(field + ".kind", "unknown kind '" + kind + "' (expected constant, periodic, piecewise, or sampled)");
}

}  // namespace

ParsedSystem parse_system_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("system definition is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("system definition must be a JSON object");
  check_keys(j, "", {"name", "description", "comment", "n", "p", "tmax", "a", "c", "partition"});

  if (!j.contains("n") || !j["n"].is_number_integer()) fail("n", "must be an integer");
  const int n = j["n"].get<int>();
  if (n <= 0) fail("n", "must be positive");

  if (!j.contains("a")) fail("a", "required");
  CoefficientFunction a = parse_coefficient(j["a"], "a");
  if (a.rows() != n || a.cols() != n)
    throw DimensionError("field 'a': evaluates to " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", expected " + std::to_string(n) + "x" +
                         std::to_string(n));

  int p = 0;
  CoefficientFunction c;
  if (j.contains("c")) {
    c = parse_coefficient(j["c"], "c");
    if (c.cols() != n)
      throw DimensionError("field 'c': must have n = " + std::to_string(n) + " columns");
    p = c.rows();
  }
  if (j.contains("p")) {
    if (!j["p"].is_number_integer()) fail("p", "must be an integer");
    if (j["p"].get<int>() != p)
      throw DimensionError("field 'p': declared " + std::to_string(j["p"].get<int>()) +
                           " but C has " + std::to_string(p) + " rows");
  }

  ParsedSystem out{LtvSystem(std::move(a), std::move(c),
                             j.contains("name") && j["name"].is_string()
                                 ? j["name"].get<std::string>()
                                 : ""),
                   std::nullopt, 50.0};

  if (j.contains("tmax")) {
    if (!j["tmax"].is_number() || !(j["tmax"].get<double>() > 0.0))
      fail("tmax", "must be a positive number");
    out.tmax = j["tmax"].get<double>();
  }
  if (j.contains("partition")) {
    const auto& pj = j["partition"];
    if (!pj.is_object() || !pj.contains("k") || !pj["k"].is_number_integer())
      fail("partition", "must be an object with integer 'k'");
    check_keys(pj, "partition", {"k"});
    BlockPartition part{n, pj["k"].get<int>()};
    part.validate();
    out.partition = part;
  }
  return out;
}

ParsedSystem load_system_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open system file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read system file '" + path + "'");
  try {
    return parse_system_json(ss.str());
  } catch (ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

namespace {

const ExampleDef kExamples[] = {
    {"saddle_observed", R"({
  "name": "saddle_observed",
  "description": "Constant saddle with the expanding direction observed.",
  "n": 2, "p": 1, "tmax": 50.0,
  "a": {"kind": "constant", "value": [[1.0, 0.0], [0.0, -1.0]]},
  "c": {"kind": "constant", "value": [[1.0, 0.0]]},
  "partition": {"k": 1}
})"},
    {"saddle_hidden", R"({
  "name": "saddle_hidden",
  "description": "Constant saddle observing only the contracting direction.",
  "n": 2, "p": 1, "tmax": 50.0,
  "a": {"kind": "constant", "value": [[1.0, 0.0], [0.0, -1.0]]},
  "c": {"kind": "constant", "value": [[0.0, 1.0]]},
  "partition": {"k": 1}
})"},
    {"rotated_saddle", R"({
  "name": "rotated_saddle",
  "description": "Saddle conjugated by a 30-degree rotation; not triangular.",
  "n": 2, "p": 1, "tmax": 50.0,
  "a": {"kind": "constant", "value": [[0.5, 0.8660254037844386], [0.8660254037844386, -0.5]]},
  "c": {"kind": "constant", "value": [[1.0, 0.0]]}
})"},
    {"periodic_saddle", R"({
  "name": "periodic_saddle",
  "description": "Diagonal saddle with sinusoidal rate modulation.",
  "n": 2, "p": 1, "tmax": 50.0,
  "a": {"kind": "periodic", "offset": [[1.0, 0.0], [0.0, -1.0]],
        "terms": [
          {"row": 0, "col": 0, "amplitude": 0.5, "frequency": 1.0, "function": "sin"},
          {"row": 1, "col": 1, "amplitude": 0.25, "frequency": 1.0, "function": "cos"}
        ]},
  "c": {"kind": "constant", "value": [[1.0, 0.0]]},
  "partition": {"k": 1}
})"},
    {"antistable_blind", R"({
  "name": "antistable_blind",
  "description": "Scalar expansion with zero output.",
  "n": 1, "p": 1, "tmax": 50.0,
  "a": {"kind": "constant", "value": [[1.0]]},
  "c": {"kind": "constant", "value": [[0.0]]},
  "partition": {"k": 0}
})"},
    {"rotation", R"({
  "name": "rotation",
  "description": "Pure rotation; every windowed rate sits at zero.",
  "n": 2, "p": 1, "tmax": 50.0,
  "a": {"kind": "constant", "value": [[0.0, -1.0], [1.0, 0.0]]},
  "c": {"kind": "constant", "value": [[1.0, 0.0]]}
})"},
    {"contraction", R"({
  "name": "contraction",
  "description": "Uniform contraction; trivially detectable with zero gain.",
  "n": 2, "p": 1, "tmax": 50.0,
  "a": {"kind": "constant", "value": [[-1.0, 0.0], [0.0, -1.0]]},
  "c": {"kind": "constant", "value": [[1.0, 0.0]]},
  "partition": {"k": 2}
})"},
    {"triu_constant", R"({
  "name": "triu_constant",
  "description": "Coupled upper-triangular constant system.",
  "n": 2, "p": 1, "tmax": 50.0,
  "a": {"kind": "constant", "value": [[1.0, 1.0], [0.0, -1.0]]},
  "c": {"kind": "constant", "value": [[1.0, 0.0]]},
  "partition": {"k": 1}
})"},
    {"triu_periodic", R"({
  "name": "triu_periodic",
  "description": "Coupled upper-triangular system with periodic entries.",
  "n": 2, "p": 1, "tmax": 50.0,
  "a": {"kind": "periodic", "offset": [[1.0, 0.0], [0.0, -1.0]],
        "terms": [
          {"row": 0, "col": 0, "amplitude": 0.3, "frequency": 1.0, "function": "sin"},
          {"row": 0, "col": 1, "amplitude": 0.5, "frequency": 1.0, "function": "cos"},
          {"row": 1, "col": 1, "amplitude": 0.2, "frequency": 1.0, "function": "sin"}
        ]},
  "c": {"kind": "constant", "value": [[1.0, 0.5]]},
  "partition": {"k": 1}
})"},
};

}  // namespace

std::span<const ExampleDef> bundled_examples() { return kExamples; }

const char* bundled_example_json(const std::string& name) {
  for (const auto& e : kExamples)
    if (name == e.name) return e.json;
  return nullptr;
}

}  // namespace ltvdet
