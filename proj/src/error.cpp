#include "expomask/error.hpp"

namespace expomask {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFileNotFound: return "FileNotFound";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidParams: return "InvalidParams";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmptyPlane: return "EmptyPlane";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kOddExtent: return "OddExtent";
    case ErrorCode::kIndivisibleExtent: return "IndivisibleExtent";
    case ErrorCode::kNonBinaryGroundTruth: return "NonBinaryGroundTruth";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kModelFormat: return "ModelFormat";
  }
  return "Unknown";
}

}  // namespace expomask
