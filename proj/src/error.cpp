#include "ecosim/error.hpp"

namespace ecosim {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::NonContiguousDistance: return "NonContiguousDistance";
    case ErrorCode::OutOfRangeField: return "OutOfRangeField";
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MissingTable: return "MissingTable";
    case ErrorCode::NonMonotoneAxis: return "NonMonotoneAxis";
    case ErrorCode::NegativeGap: return "NegativeGap";
    case ErrorCode::NeverReaches: return "NeverReaches";
    case ErrorCode::InfeasibleBand: return "InfeasibleBand";
    case ErrorCode::PlanExpired: return "PlanExpired";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnknownType: return "UnknownType";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::MalformedPayload: return "MalformedPayload";
    case ErrorCode::ComponentFault: return "ComponentFault";
    case ErrorCode::BindFailure: return "BindFailure";
    case ErrorCode::SendFailure: return "SendFailure";
    case ErrorCode::SpecInfeasible: return "SpecInfeasible";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::UnpairedTrace: return "UnpairedTrace";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

namespace {
std::string decorate(ErrorCode code, const std::string& message, std::size_t line) {
  std::string out(to_string(code));
  if (line > 0) out += " (line " + std::to_string(line) + ")";
  out += ": ";
  out += message;
  return out;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::size_t line)
    : std::runtime_error(decorate(code, message, line)), code_(code), line_(line) {}

}  // namespace ecosim
