#pragma once

#include <stdexcept>
#include <string>

namespace rssh {

enum class ErrorCode {
  kInvalidDimension,
  kDimensionMismatch,
  kZeroMatrix,
  kRankTooLarge,
  kNonConvergence,
  kNonFinite,
  kInvalidParams,
  kEmptyModel,
  kUndefinedMetric,
  kMissingLabel,
  kRejectionTimeout,
  kMalformedFile,
  kDimensionInconsistency,
  kEmptyDataset,
  kBadMagic,
  kVersionUnsupported,
  kTruncatedFile,
  kChecksumMismatch,
  kIo,
  kInvariantViolation,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rssh
