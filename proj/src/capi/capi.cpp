#include "ltvdet/ltvdet.h"

#include <cstring>
#include <string>

#include "../core/errors.hpp"
#include "../core/runner.hpp"
#include "../core/sysfile.hpp"

using namespace ltvdet;

struct ltvdet_system {
  ParsedSystem parsed;
};

struct ltvdet_result {
  RunResult run;
};

namespace {

thread_local std::string g_last_error;

ltvdet_status set_error(ltvdet_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

ltvdet_status status_from(const Error& e) {
  switch (e.code()) {
    case ErrorCode::invalid_argument: return LTVDET_ERR_INVALID_ARGUMENT;
    case ErrorCode::parse: return LTVDET_ERR_PARSE;
    case ErrorCode::dimension: return LTVDET_ERR_DIMENSION;
    case ErrorCode::domain: return LTVDET_ERR_DOMAIN;
    case ErrorCode::numeric: return LTVDET_ERR_NUMERIC;
    case ErrorCode::io: return LTVDET_ERR_IO;
    case ErrorCode::internal: return LTVDET_ERR_INTERNAL;
  }
  return LTVDET_ERR_INTERNAL;
}

template <typename Fn>
ltvdet_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return LTVDET_OK;
  } catch (const Error& e) {
    return set_error(status_from(e), e.what());
  } catch (const std::exception& e) {
    return set_error(LTVDET_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(LTVDET_ERR_INTERNAL, "unknown error");
  }
}

}  // namespace

extern "C" {

const char* ltvdet_version(void) { return kToolVersion; }

const char* ltvdet_last_error(void) { return g_last_error.c_str(); }

ltvdet_status ltvdet_system_from_json(const char* json_text, ltvdet_system** out) {
  if (!json_text || !out)
    return set_error(LTVDET_ERR_INVALID_ARGUMENT, "null argument to ltvdet_system_from_json");
  *out = nullptr;
  return guarded([&] { *out = new ltvdet_system{parse_system_json(json_text)}; });
}

ltvdet_status ltvdet_system_from_file(const char* path, ltvdet_system** out) {
  if (!path || !out)
    return set_error(LTVDET_ERR_INVALID_ARGUMENT, "null argument to ltvdet_system_from_file");
  *out = nullptr;
  return guarded([&] { *out = new ltvdet_system{load_system_file(path)}; });
}

void ltvdet_system_free(ltvdet_system* sys) { delete sys; }

int ltvdet_system_state_dim(const ltvdet_system* sys) {
  return sys ? sys->parsed.system.n() : -1;
}

int ltvdet_system_output_dim(const ltvdet_system* sys) {
  return sys ? sys->parsed.system.p() : -1;
}

ltvdet_status ltvdet_system_eval(const ltvdet_system* sys, double t, double* a, double* c) {
  if (!sys) return set_error(LTVDET_ERR_INVALID_ARGUMENT, "null system handle");
  return guarded([&] {
    const LtvSystem& s = sys->parsed.system;
    if (a) {
      const Matrix m = s.a().eval(t);
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index cc = 0; cc < m.cols(); ++cc) a[r * m.cols() + cc] = m(r, cc);
    }
    if (c && s.p() > 0) {
      const Matrix m = s.c().eval(t);
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index cc = 0; cc < m.cols(); ++cc) c[r * m.cols() + cc] = m(r, cc);
    }
  });
}

int ltvdet_example_count(void) { return static_cast<int>(bundled_examples().size()); }

const char* ltvdet_example_name(int index) {
  const auto ex = bundled_examples();
  if (index < 0 || static_cast<size_t>(index) >= ex.size()) return nullptr;
  return ex[static_cast<size_t>(index)].name;
}

const char* ltvdet_example_json(const char* name) {
  if (!name) return nullptr;
  return bundled_example_json(name);
}

ltvdet_status ltvdet_run(const ltvdet_system* sys, const char* op, const char* options_json,
                         ltvdet_result** out) {
  if (!sys || !op || !out)
    return set_error(LTVDET_ERR_INVALID_ARGUMENT, "null argument to ltvdet_run");
  *out = nullptr;
  return guarded([&] {
    RunResult run = run_operation(sys->parsed, op, options_json ? options_json : "");
    *out = new ltvdet_result{std::move(run)};
  });
}

void ltvdet_result_free(ltvdet_result* res) { delete res; }

const char* ltvdet_result_report_json(const ltvdet_result* res) {
  return res ? res->run.report_json.c_str() : nullptr;
}

int ltvdet_result_curve_count(const ltvdet_result* res) {
  return res ? static_cast<int>(res->run.curves.size()) : -1;
}

const char* ltvdet_result_curve_name(const ltvdet_result* res, int index) {
  if (!res || index < 0 || static_cast<size_t>(index) >= res->run.curves.size()) return nullptr;
  return res->run.curves[static_cast<size_t>(index)].name.c_str();
}

const char* ltvdet_result_curve_csv(const ltvdet_result* res, int index) {
  if (!res || index < 0 || static_cast<size_t>(index) >= res->run.curves.size()) return nullptr;
  return res->run.curves[static_cast<size_t>(index)].csv.c_str();
}

} /* extern "C" */
