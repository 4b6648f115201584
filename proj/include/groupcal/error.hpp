#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace groupcal {

enum class ErrorCode {
  EmptyDataset,
  EmptyInput,
  DimensionMismatch,
  NonFiniteValue,
  NonBinaryLabel,
  BadRatios,
  NonFiniteLogit,
  IndexOutOfRange,
  EmptyVerdicts,
  DuplicateConflict,
  TooFewSamples,
  UnknownFeature,
  NotFitted,
  MissingQ,
  BadConfig,
  FormatError,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NonBinaryLabel: return "NonBinaryLabel";
    case ErrorCode::BadRatios: return "BadRatios";
    case ErrorCode::NonFiniteLogit: return "NonFiniteLogit";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptyVerdicts: return "EmptyVerdicts";
    case ErrorCode::DuplicateConflict: return "DuplicateConflict";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::UnknownFeature: return "UnknownFeature";
    case ErrorCode::NotFitted: return "NotFitted";
    case ErrorCode::MissingQ: return "MissingQ";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every library failure is raised as an Error carrying a stable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace groupcal
