#include "diff3f/error.hpp"

namespace diff3f {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnreadableFile: return "UnreadableFile";
    case ErrorCode::kMalformedGeometry: return "MalformedGeometry";
    case ErrorCode::kEmptyShape: return "EmptyShape";
    case ErrorCode::kDegenerateShape: return "DegenerateShape";
    case ErrorCode::kCountTooLarge: return "CountTooLarge";
    case ErrorCode::kNoFaces: return "NoFaces";
    case ErrorCode::kInvalidCamera: return "InvalidCamera";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidFeatureMap: return "InvalidFeatureMap";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kVersionUnsupported: return "VersionUnsupported";
    case ErrorCode::kTruncatedPayload: return "TruncatedPayload";
    case ErrorCode::kInvalidManifest: return "InvalidManifest";
    case ErrorCode::kWindowMismatch: return "WindowMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kResolutionMismatch: return "ResolutionMismatch";
    case ErrorCode::kNoCoverage: return "NoCoverage";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kMissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace diff3f
