#include "bayeswind/error.hpp"

namespace bayeswind {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingValue: return "MissingValue";
    case ErrorCode::kNonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kEmptySplit: return "EmptySplit";
    case ErrorCode::kDegenerateRange: return "DegenerateRange";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonPositiveSigma: return "NonPositiveSigma";
    case ErrorCode::kInvalidPrior: return "InvalidPrior";
    case ErrorCode::kEmptyWindow: return "EmptyWindow";
    case ErrorCode::kCacheMismatch: return "CacheMismatch";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kDivergedLoss: return "DivergedLoss";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kZeroVariance: return "ZeroVariance";
    case ErrorCode::kNegativeWidth: return "NegativeWidth";
    case ErrorCode::kNotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kUpstreamMissing: return "UpstreamMissing";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

}  // namespace bayeswind
