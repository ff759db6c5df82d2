#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crembo {

enum class ErrorCode {
  InvalidArgument,
  Io,
  MissingColumn,
  NonNumericFeature,
  EmptyDataset,
  TooManyClasses,
  ClassTooSmall,
  FoldCountExceedsRows,
  UnlabeledDataset,
  FeatureDimensionMismatch,
  ShapeMismatch,
  RowNotStochastic,
  NegativeEntry,
  NonPositiveTemperature,
  EmptySample,
  EmptyHypothesisSample,
  TrimExceedsSample,
  LearnerAlwaysFails,
  EnumerationBudgetExceeded,
  AllEpsilonInfeasible,
  LengthMismatch,
  InstanceTooLarge,
  ConstraintViolation,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for errors caused by bad input or configuration, as opposed to a
/// broken internal contract (learner misbehaviour, violated post-conditions).
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace crembo
