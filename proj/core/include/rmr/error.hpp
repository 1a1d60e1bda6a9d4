#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rmr {

enum class ErrorCode {
  kInvalidArgument,
  // Embeddings and fusion.
  kBothModalitiesAbsent,
  kDimensionMismatch,
  kNonFiniteInput,
  kZeroNormVector,
  // Library construction and retrieval.
  kDuplicateId,
  kInvalidTriplet,
  kEmptyInput,
  kEmptyLibraryAfterExclusion,
  kUnknownItemId,
  // Index persistence.
  kIoFailure,
  kBadMagic,
  kVersionMismatch,
  kChecksumMismatch,
  kTruncatedFile,
  // Context assembly.
  kBudgetTooSmall,
  // Model endpoint.
  kTimeout,
  kAuthFailure,
  kRateLimited,
  kMalformedResponse,
  kEndpointFailure,
  // Datasets and evaluation.
  kParseError,
  kMissingField,
  kBadGoldIndex,
  kEmptyPartition,
  kConfiguration,
};

/// Coarse grouping used to pick process exit codes.
enum class ErrorCategory { kConfiguration, kData, kEndpoint };

std::string_view to_string(ErrorCode code) noexcept;
ErrorCategory category_of(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }
  /// The message without the "<Code>: " prefix that what() carries.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace rmr
