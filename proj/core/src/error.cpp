#include "equirate/error.hpp"

#include <fmt/format.h>

namespace equirate {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kParse: return "ParseError";
    case ErrorKind::kIo: return "IoError";
    case ErrorKind::kNoTradingDate: return "NoTradingDate";
    case ErrorKind::kInsufficientHistory: return "InsufficientHistory";
    case ErrorKind::kTooFewCompanies: return "TooFewCompanies";
    case ErrorKind::kOutOfRange: return "OutOfRange";
    case ErrorKind::kKeyMismatch: return "KeyMismatch";
    case ErrorKind::kUnknownTerm: return "UnknownTerm";
    case ErrorKind::kEmptyBundle: return "EmptyBundle";
    case ErrorKind::kUnparsableSentiment: return "UnparsableSentiment";
    case ErrorKind::kNoFilings: return "NoFilings";
    case ErrorKind::kLeakage: return "Leakage";
    case ErrorKind::kMissingInput: return "MissingInput";
    case ErrorKind::kExtraInput: return "ExtraInput";
    case ErrorKind::kTemplate: return "TemplateError";
    case ErrorKind::kBackendUnavailable: return "BackendUnavailable";
    case ErrorKind::kContextOverflow: return "ContextOverflow";
    case ErrorKind::kMalformedResponse: return "MalformedResponse";
    case ErrorKind::kDateMismatch: return "DateMismatch";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kEmptyInput: return "EmptyInput";
    case ErrorKind::kMissingHorizon: return "MissingHorizon";
    case ErrorKind::kDegenerate: return "Degenerate";
    case ErrorKind::kEmptyUniverse: return "EmptyUniverse";
    case ErrorKind::kEmptyDateRange: return "EmptyDateRange";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", to_string(kind), message)), kind_(kind) {}

}  // namespace equirate
