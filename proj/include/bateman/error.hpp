#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bateman {

enum class ErrorKind {
  kInvalidParams,
  kOverdampedRegime,
  kDimensionMismatch,
  kSingularConstraintMatrix,
  kStepTooLarge,
  kTooFewPoints,
  kCutoffInsufficient,
  kEigDecompositionFailure,
  kShapeMismatch,
  kHistoryGap,
  kLevelTooLarge,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidParams: return "InvalidParams";
    case ErrorKind::kOverdampedRegime: return "OverdampedRegime";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kSingularConstraintMatrix: return "SingularConstraintMatrix";
    case ErrorKind::kStepTooLarge: return "StepTooLarge";
    case ErrorKind::kTooFewPoints: return "TooFewPoints";
    case ErrorKind::kCutoffInsufficient: return "CutoffInsufficient";
    case ErrorKind::kEigDecompositionFailure: return "EigDecompositionFailure";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kHistoryGap: return "HistoryGap";
    case ErrorKind::kLevelTooLarge: return "LevelTooLarge";
  }
  return "Unknown";
}

/// True for errors caused by bad input rather than by a numerical failure.
constexpr bool is_validation_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidParams:
    case ErrorKind::kOverdampedRegime:
    case ErrorKind::kDimensionMismatch:
    case ErrorKind::kStepTooLarge:
    case ErrorKind::kTooFewPoints:
    case ErrorKind::kShapeMismatch:
    case ErrorKind::kLevelTooLarge:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace bateman
