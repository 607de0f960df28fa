#include "retina/error.hpp"

namespace retina {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kMalformedRow: return "MalformedRow";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kDuplicatePath: return "DuplicatePath";
    case ErrorCode::kEmptyManifest: return "EmptyManifest";
    case ErrorCode::kEmptyImage: return "EmptyImage";
    case ErrorCode::kZeroTargetDimension: return "ZeroTargetDimension";
    case ErrorCode::kNotThreeChannel: return "NotThreeChannel";
    case ErrorCode::kNotSingleChannel: return "NotSingleChannel";
    case ErrorCode::kUnsupportedImage: return "UnsupportedImage";
    case ErrorCode::kNonDivisibleDimensions: return "NonDivisibleDimensions";
    case ErrorCode::kKeypointOutOfBounds: return "KeypointOutOfBounds";
    case ErrorCode::kWrongPatchSize: return "WrongPatchSize";
    case ErrorCode::kTooFewFeatures: return "TooFewFeatures";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kBackendFailure: return "BackendFailure";
    case ErrorCode::kModelLoadFailure: return "ModelLoadFailure";
    case ErrorCode::kMissingPenultimateLayer: return "MissingPenultimateLayer";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kSingleClassInput: return "SingleClassInput";
    case ErrorCode::kMissingClass: return "MissingClass";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kBadK: return "BadK";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyMatrix: return "EmptyMatrix";
    case ErrorCode::kEmptyInput: return "EmptyInput";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + detail),
      code_(code) {}

}  // namespace retina
