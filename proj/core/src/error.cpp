#include "rmr/error.hpp"

namespace rmr {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kBothModalitiesAbsent: return "BothModalitiesAbsent";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kZeroNormVector: return "ZeroNormVector";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kInvalidTriplet: return "InvalidTriplet";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kEmptyLibraryAfterExclusion: return "EmptyLibraryAfterExclusion";
    case ErrorCode::kUnknownItemId: return "UnknownItemId";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kBudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kAuthFailure: return "AuthFailure";
    case ErrorCode::kRateLimited: return "RateLimited";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kEndpointFailure: return "EndpointFailure";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kBadGoldIndex: return "BadGoldIndex";
    case ErrorCode::kEmptyPartition: return "EmptyPartition";
    case ErrorCode::kConfiguration: return "Configuration";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kTimeout:
    case ErrorCode::kAuthFailure:
    case ErrorCode::kRateLimited:
    case ErrorCode::kMalformedResponse:
    case ErrorCode::kEndpointFailure:
      return ErrorCategory::kEndpoint;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kConfiguration:
      return ErrorCategory::kConfiguration;
    default:
      return ErrorCategory::kData;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

}  // namespace rmr
