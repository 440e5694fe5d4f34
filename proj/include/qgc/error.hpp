#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qgc {

enum class ErrorCode {
  NotHurwitz,
  SingularSystem,
  NoStabilizingSolution,
  Blowup,
  DimensionMismatch,
  NonRealResult,
  StructureMismatch,
  NotPositive,
  NotPSD,
  SingularCoupling,
  NoFeasibleTau,
  ParseError,
  UnknownKey,
  InvalidSpec,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotHurwitz: return "NotHurwitz";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NoStabilizingSolution: return "NoStabilizingSolution";
    case ErrorCode::Blowup: return "Blowup";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonRealResult: return "NonRealResult";
    case ErrorCode::StructureMismatch: return "StructureMismatch";
    case ErrorCode::NotPositive: return "NotPositive";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::SingularCoupling: return "SingularCoupling";
    case ErrorCode::NoFeasibleTau: return "NoFeasibleTau";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Single exception type for the library; `code()` tells callers which
/// failure occurred without needing a class hierarchy.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qgc
