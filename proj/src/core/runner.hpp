#pragma once

#include <string>
#include <vector>

#include "sysfile.hpp"

namespace ltvdet {

inline constexpr const char* kToolName = "ltvdet";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kReportSchema = "ltvdet.report/1";

struct NamedCurve {
  std::string name;  // file stem, e.g. "qr_flow"
  std::string csv;   // header line + %.12g rows
};

struct RunResult {
  std::string report_json;  // schema-versioned report; "meta" carries the timestamp
  std::vector<NamedCurve> curves;
};

// Dispatch for op in {qr, dichotomy, gramian, reduce, observe, analyze}.
// options_json is an op-specific object; unknown keys are rejected. Negative
// analysis outcomes (not detectable, certification failed) are reported in
// the JSON, not thrown; operational errors propagate as ltvdet exceptions.
RunResult run_operation(const ParsedSystem& parsed, const std::string& op,
                        const std::string& options_json);

}  // namespace ltvdet
