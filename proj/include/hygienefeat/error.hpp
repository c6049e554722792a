#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hygienefeat {

enum class ErrorCode {
  UnsupportedFormat,
  TruncatedData,
  MalformedHeader,
  IoFailure,
  InvalidSigma,
  ImageTooSmall,
  NotColorImage,
  EmptyInput,
  EmptyRegion,
  OutOfBounds,
  InvalidK,
  DegenerateNeighborhood,
  OutOfImage,
  InvalidTransform,
  EmptySource,
  InsufficientFeatures,
  HeaderMismatch,
  RowParseError,
  FrameLoadError,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Every module reports failures through this exception; `code()` identifies
// the contract violation and `what()` carries a human-readable diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hygienefeat
