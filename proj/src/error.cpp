#include "hygienefeat/error.hpp"

namespace hygienefeat {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidSigma: return "InvalidSigma";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::NotColorImage: return "NotColorImage";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::DegenerateNeighborhood: return "DegenerateNeighborhood";
    case ErrorCode::OutOfImage: return "OutOfImage";
    case ErrorCode::InvalidTransform: return "InvalidTransform";
    case ErrorCode::EmptySource: return "EmptySource";
    case ErrorCode::InsufficientFeatures: return "InsufficientFeatures";
    case ErrorCode::HeaderMismatch: return "HeaderMismatch";
    case ErrorCode::RowParseError: return "RowParseError";
    case ErrorCode::FrameLoadError: return "FrameLoadError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace hygienefeat
