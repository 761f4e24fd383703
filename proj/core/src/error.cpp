#include "futilsim/error.hpp"

namespace futilsim {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidProportions: return "InvalidProportions";
    case ErrorCode::InfeasibleQuota: return "InfeasibleQuota";
    case ErrorCode::NonPositiveN: return "NonPositiveN";
    case ErrorCode::InvalidDesign: return "InvalidDesign";
    case ErrorCode::QuotaInfeasible: return "QuotaInfeasible";
    case ErrorCode::FractionTooSmall: return "FractionTooSmall";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyStratum: return "EmptyStratum";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Inestimable: return "Inestimable";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::TooFewSites: return "TooFewSites";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::MissingStratum: return "MissingStratum";
    case ErrorCode::ArmMissing: return "ArmMissing";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::ZeroExpected: return "ZeroExpected";
    case ErrorCode::VariableMissing: return "VariableMissing";
    case ErrorCode::IaNotSubset: return "IaNotSubset";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::DegenerateGap: return "DegenerateGap";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace futilsim
