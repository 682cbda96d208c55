#include "rssh/error.hpp"

namespace rssh {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidDimension: return "invalid-dimension";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kZeroMatrix: return "zero-matrix";
    case ErrorCode::kRankTooLarge: return "rank-too-large";
    case ErrorCode::kNonConvergence: return "non-convergence";
    case ErrorCode::kNonFinite: return "non-finite";
    case ErrorCode::kInvalidParams: return "invalid-params";
    case ErrorCode::kEmptyModel: return "empty-model";
    case ErrorCode::kUndefinedMetric: return "undefined-metric";
    case ErrorCode::kMissingLabel: return "missing-label";
    case ErrorCode::kRejectionTimeout: return "rejection-timeout";
    case ErrorCode::kMalformedFile: return "malformed-file";
    case ErrorCode::kDimensionInconsistency: return "dimension-inconsistency";
    case ErrorCode::kEmptyDataset: return "empty-dataset";
    case ErrorCode::kBadMagic: return "bad-magic";
    case ErrorCode::kVersionUnsupported: return "version-unsupported";
    case ErrorCode::kTruncatedFile: return "truncated-file";
    case ErrorCode::kChecksumMismatch: return "checksum-mismatch";
    case ErrorCode::kIo: return "io-error";
    case ErrorCode::kInvariantViolation: return "invariant-violation";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace rssh
