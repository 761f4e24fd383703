#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace futilsim {

enum class ErrorCode {
  InvalidArgument,
  InvalidProportions,
  InfeasibleQuota,
  NonPositiveN,
  InvalidDesign,
  QuotaInfeasible,
  FractionTooSmall,
  EmptyInput,
  EmptyStratum,
  LengthMismatch,
  Inestimable,
  RankDeficient,
  TooFewSites,
  NoConvergence,
  NotConverged,
  MissingStratum,
  ArmMissing,
  QuadratureFailure,
  ZeroExpected,
  VariableMissing,
  IaNotSubset,
  EmptySample,
  ZeroReference,
  DegenerateGap,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the replication engine in particular) can record it per row.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace futilsim
