#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hmv {

enum class ErrorCode {
  // input validation
  DimensionMismatch,
  NotSquare,
  NotSymmetric,
  NonFiniteInput,
  TooFewSamples,
  InvalidRho,
  XiOutOfRange,
  BadIndex,
  InvalidConfig,
  ZeroVariance,
  EmptyResult,
  AllNonPositive,
  IoError,
  // numerical failures
  NotPSD,
  SingularCovariance,
  ZeroNormalizer,
  SingularQ,
  DegenerateConstraint,
  SingularComplementBlock,
  SingularComplement,
  SingularPrecisionProduct,
  DegenerateBVector,
  NoFeasibleXi,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotSquare: return "NotSquare";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::InvalidRho: return "InvalidRho";
    case ErrorCode::XiOutOfRange: return "XiOutOfRange";
    case ErrorCode::BadIndex: return "BadIndex";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::AllNonPositive: return "AllNonPositive";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::ZeroNormalizer: return "ZeroNormalizer";
    case ErrorCode::SingularQ: return "SingularQ";
    case ErrorCode::DegenerateConstraint: return "DegenerateConstraint";
    case ErrorCode::SingularComplementBlock: return "SingularComplementBlock";
    case ErrorCode::SingularComplement: return "SingularComplement";
    case ErrorCode::SingularPrecisionProduct: return "SingularPrecisionProduct";
    case ErrorCode::DegenerateBVector: return "DegenerateBVector";
    case ErrorCode::NoFeasibleXi: return "NoFeasibleXi";
  }
  return "Unknown";
}

/// True for codes caused by bad input rather than by the numerics of a
/// well-formed problem. The CLI maps these to exit code 2, the rest to 3.
constexpr bool is_validation_error(ErrorCode code) {
  return code <= ErrorCode::IoError;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hmv
