#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace equirate {

enum class ErrorKind {
  kInvalidArgument,
  kParse,
  kIo,
  // market-data
  kNoTradingDate,
  kInsufficientHistory,
  // labeler
  kTooFewCompanies,
  kOutOfRange,
  kKeyMismatch,
  // ratings
  kUnknownTerm,
  // news
  kEmptyBundle,
  kUnparsableSentiment,
  // fundamentals
  kNoFilings,
  kLeakage,
  // prompting
  kMissingInput,
  kExtraInput,
  kTemplate,
  // gateway
  kBackendUnavailable,
  kContextOverflow,
  kMalformedResponse,
  kDateMismatch,
  // evaluation
  kLengthMismatch,
  kEmptyInput,
  kMissingHorizon,
  kDegenerate,
  // runner
  kEmptyUniverse,
  kEmptyDateRange,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure surfaced by the library carries a kind so callers (and the
// run manifest) can classify it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace equirate
