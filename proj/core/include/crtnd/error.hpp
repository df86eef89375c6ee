#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crtnd {

enum class ErrorCode {
  // input / configuration (CLI exit code 2)
  ParseError,
  SchemaError,
  InvalidConfig,
  InvalidArgument,
  InvalidScheme,
  DimensionMismatch,
  IncompletePanel,
  MissingDose,
  // computational (CLI exit code 3)
  ZeroCount,
  ZeroArmTotal,
  ArmTooSmall,
  EmptyCluster,
  ZeroPositiveTotal,
  NoAdmissibleRoot,
  AmbiguousRoot,
  RankDeficientCovariates,
  SupportTooLarge,
  ConstantDose,
  StatisticUndefined,
  NoNonRejectedPoint,
  NonUnimodalPValue,
  GroupTooSmall,
  SingularCovariance,
  DegenerateReplicateLimit,
};

std::string_view to_string(ErrorCode code) noexcept;

// True for errors caused by malformed input or configuration rather than by
// the data failing an estimator's numerical preconditions.
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace crtnd
