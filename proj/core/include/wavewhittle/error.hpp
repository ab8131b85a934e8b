#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ww {

enum class ErrorCode {
  UnsupportedOrder,
  SeriesTooShort,
  NonFiniteInput,
  IndexOutOfRange,
  DomainError,
  ConvergenceError,
  SingularityError,
  DivergentSeries,
  DegenerateDelta,
  EmptyScale,
  DegenerateVariance,
  NonPDMatrix,
  OptimFailed,
  CosineSingularity,
  SingularMatrix,
  ResourceLimit,
  ParseError,
  EmptyFile,
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode c);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode c, const std::string& msg) { throw Error(c, msg); }

}  // namespace ww
