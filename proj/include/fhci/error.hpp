#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fhci {

enum class ErrorCode {
  NonPositiveSamplingVariance,
  RankDeficientDesign,
  TooFewAreas,
  IndexOutOfRange,
  MalformedInput,
  SingularNormalEquations,
  SingularAtZero,
  QuadratureFailure,
  NoInteriorMaximum,
  OptimizerDidNotConverge,
  NotBalanced,
  UniquenessConditionViolated,
  InvalidAlpha,
  InvalidArgument,
  BootstrapDegenerate,
  UnknownPattern,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveSamplingVariance: return "NonPositiveSamplingVariance";
    case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorCode::TooFewAreas: return "TooFewAreas";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::SingularNormalEquations: return "SingularNormalEquations";
    case ErrorCode::SingularAtZero: return "SingularAtZero";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::NoInteriorMaximum: return "NoInteriorMaximum";
    case ErrorCode::OptimizerDidNotConverge: return "OptimizerDidNotConverge";
    case ErrorCode::NotBalanced: return "NotBalanced";
    case ErrorCode::UniquenessConditionViolated: return "UniquenessConditionViolated";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BootstrapDegenerate: return "BootstrapDegenerate";
    case ErrorCode::UnknownPattern: return "UnknownPattern";
  }
  return "Unknown";
}

/// Input-validation failures (as opposed to numerical ones). The CLI maps
/// these to a different exit status.
inline bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveSamplingVariance:
    case ErrorCode::RankDeficientDesign:
    case ErrorCode::TooFewAreas:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::MalformedInput:
    case ErrorCode::NotBalanced:
    case ErrorCode::InvalidAlpha:
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnknownPattern:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Thrown for a bad sampling variance; `area()` is 1-based like the row count.
class NonPositiveSamplingVariance : public Error {
 public:
  explicit NonPositiveSamplingVariance(std::size_t area)
      : Error(ErrorCode::NonPositiveSamplingVariance,
              "sampling variance of area " + std::to_string(area) + " is not positive"),
        area_(area) {}

  std::size_t area() const noexcept { return area_; }

 private:
  std::size_t area_;
};

}  // namespace fhci
