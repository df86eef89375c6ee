#include "crtnd/error.hpp"

namespace crtnd {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidScheme: return "InvalidScheme";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IncompletePanel: return "IncompletePanel";
    case ErrorCode::MissingDose: return "MissingDose";
    case ErrorCode::ZeroCount: return "ZeroCount";
    case ErrorCode::ZeroArmTotal: return "ZeroArmTotal";
    case ErrorCode::ArmTooSmall: return "ArmTooSmall";
    case ErrorCode::EmptyCluster: return "EmptyCluster";
    case ErrorCode::ZeroPositiveTotal: return "ZeroPositiveTotal";
    case ErrorCode::NoAdmissibleRoot: return "NoAdmissibleRoot";
    case ErrorCode::AmbiguousRoot: return "AmbiguousRoot";
    case ErrorCode::RankDeficientCovariates: return "RankDeficientCovariates";
    case ErrorCode::SupportTooLarge: return "SupportTooLarge";
    case ErrorCode::ConstantDose: return "ConstantDose";
    case ErrorCode::StatisticUndefined: return "StatisticUndefined";
    case ErrorCode::NoNonRejectedPoint: return "NoNonRejectedPoint";
    case ErrorCode::NonUnimodalPValue: return "NonUnimodalPValue";
    case ErrorCode::GroupTooSmall: return "GroupTooSmall";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::DegenerateReplicateLimit: return "DegenerateReplicateLimit";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::SchemaError:
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidScheme:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::IncompletePanel:
    case ErrorCode::MissingDose:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace crtnd
