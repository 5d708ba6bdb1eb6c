#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace diff3f {

enum class ErrorCode {
  kUnreadableFile,
  kMalformedGeometry,
  kEmptyShape,
  kDegenerateShape,
  kCountTooLarge,
  kNoFaces,
  kInvalidCamera,
  kIoError,
  kInvalidFeatureMap,
  kBadMagic,
  kVersionUnsupported,
  kTruncatedPayload,
  kInvalidManifest,
  kWindowMismatch,
  kShapeMismatch,
  kResolutionMismatch,
  kNoCoverage,
  kDimMismatch,
  kMissingGroundTruth,
  kKTooLarge,
  kInvalidArgument,
};

std::string_view error_code_name(ErrorCode code);

// All library failures are reported through this exception; `code()` is
// stable and is what the CLI serializes into its JSON error payload.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace diff3f
