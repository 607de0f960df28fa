#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace retina {

enum class ErrorCode {
  kInvalidArgument,
  kIoError,
  // dataset
  kMissingFile,
  kMalformedRow,
  kUnknownLabel,
  kDuplicatePath,
  kEmptyManifest,
  // image
  kEmptyImage,
  kZeroTargetDimension,
  kNotThreeChannel,
  kNotSingleChannel,
  kUnsupportedImage,
  // descriptors
  kNonDivisibleDimensions,
  kKeypointOutOfBounds,
  kWrongPatchSize,
  // bovw / svm shared
  kTooFewFeatures,
  kNonFiniteInput,
  kDimensionMismatch,
  // deepfeat
  kBackendFailure,
  kModelLoadFailure,
  kMissingPenultimateLayer,
  kBadMagic,
  kTruncatedFile,
  kDimMismatch,
  // svm
  kSingleClassInput,
  kMissingClass,
  // eval
  kTooFewSamples,
  kBadK,
  kLengthMismatch,
  kEmptyMatrix,
  kEmptyInput,
};

std::string_view error_code_name(ErrorCode code);

// All library failures are reported through this exception type; code()
// identifies the failure class, what() carries the detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace retina
