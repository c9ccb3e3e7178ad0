#pragma once

#include <stdexcept>
#include <string>

namespace ltvdet {

// Mirrors ltvdet_status in the C header.
enum class ErrorCode {
  invalid_argument = 1,
  parse = 2,
  dimension = 3,
  domain = 4,
  numeric = 5,
  io = 6,
  internal = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct InvalidArgumentError : Error {
  explicit InvalidArgumentError(const std::string& w) : Error(ErrorCode::invalid_argument, w) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error(ErrorCode::parse, w) {}
};
struct DimensionError : Error {
  explicit DimensionError(const std::string& w) : Error(ErrorCode::dimension, w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorCode::domain, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorCode::io, w) {}
};

// Numeric family. Distinct types so tests and callers can discriminate.
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorCode::numeric, w) {}
};
struct OverflowError : NumericError {
  OverflowError(const std::string& w, double t) : NumericError(w), time(t) {}
  double time;
};
struct StiffnessError : NumericError {
  StiffnessError(const std::string& w, double t) : NumericError(w), time(t) {}
  double time;
};
struct ConditioningError : NumericError {
  explicit ConditioningError(const std::string& w) : NumericError(w) {}
};
struct FlowError : NumericError {
  explicit FlowError(const std::string& w) : NumericError(w) {}
};
struct NoGapError : NumericError {
  explicit NoGapError(const std::string& w) : NumericError(w) {}
};
struct CertificationError : NumericError {
  explicit CertificationError(const std::string& w) : NumericError(w) {}
};
struct GridError : NumericError {
  explicit GridError(const std::string& w) : NumericError(w) {}
};
struct TruncationError : NumericError {
  explicit TruncationError(const std::string& w) : NumericError(w) {}
};
struct DivergenceError : NumericError {
  DivergenceError(const std::string& w, double t) : NumericError(w), time(t) {}
  double time;
};
struct FormError : Error {
  explicit FormError(const std::string& w) : Error(ErrorCode::invalid_argument, w) {}
};

}  // namespace ltvdet
