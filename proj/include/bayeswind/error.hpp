#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bayeswind {

enum class ErrorCode {
  kMissingValue,
  kNonMonotonicTime,
  kSchemaMismatch,
  kEmptySplit,
  kDegenerateRange,
  kTooShort,
  kShapeMismatch,
  kNonPositiveSigma,
  kInvalidPrior,
  kEmptyWindow,
  kCacheMismatch,
  kEmptyBatch,
  kEmptyDataset,
  kDivergedLoss,
  kTooFewSamples,
  kLengthMismatch,
  kZeroVariance,
  kNegativeWidth,
  kNotPositiveDefinite,
  kOutOfRange,
  kConfigInvalid,
  kUpstreamMissing,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

// Single exception type for every module; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bayeswind
