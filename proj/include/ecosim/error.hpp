#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ecosim {

enum class ErrorCode {
  MalformedRow,
  NonContiguousDistance,
  OutOfRangeField,
  MalformedDocument,
  LengthMismatch,
  MissingTable,
  NonMonotoneAxis,
  NegativeGap,
  NeverReaches,
  InfeasibleBand,
  PlanExpired,
  BadMagic,
  UnknownType,
  TruncatedPayload,
  VersionMismatch,
  MalformedPayload,
  ComponentFault,
  BindFailure,
  SendFailure,
  SpecInfeasible,
  Timeout,
  UnpairedTrace,
  InvalidConfig,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers dispatch on code().
// line() is 1-based for text-format errors and 0 when not applicable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::size_t line = 0);

  ErrorCode code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::size_t line_;
};

}  // namespace ecosim
