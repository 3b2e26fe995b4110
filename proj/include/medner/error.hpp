#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace medner {

enum class ErrorCode {
  UnknownLabel,
  IndexOutOfRange,
  UncoveredWord,
  UnorderedSubwords,
  EmptyVote,
  InvalidThreshold,
  LengthMismatch,
  MissingLogits,
  EmptyDataset,
  NonFiniteLoss,
  DimensionMismatch,
  EmptyInput,
  EmptyQuery,
  MalformedRow,
  HeaderMismatch,
  CoverageGap,
  ParseError,
  IoError,
  InvalidArgument,
  Unavailable,
};

std::string_view to_string(ErrorCode code);

// Every failure in the library surfaces as this exception; code() is what the
// CLI and the HTTP service report back to callers.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace medner
