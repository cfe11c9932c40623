#pragma once

#include <stdexcept>
#include <string>

namespace humot {

/// Broad failure category. The CLI maps each category to an exit code.
enum class ErrorKind {
  kUsage,
  kData,
  kModel,
  kNumeric,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed skeletons, motions, files and datasets.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

/// Shape mismatches, config mismatches and other model-side failures.
class ModelError : public Error {
 public:
  explicit ModelError(const std::string& what) : Error(ErrorKind::kModel, what) {}
};

/// Non-finite losses, degenerate geometry that cannot be normalized.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::kNumeric, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::kUsage, what) {}
};

/// Distinct reasons a stored file can be rejected.
enum class FileErrorCode {
  kIo,
  kBadMagic,
  kVersionMismatch,
  kTruncated,
  kChecksumMismatch,
  kMalformed,
  kConfigMismatch,
};

inline const char* to_string(FileErrorCode code) {
  switch (code) {
    case FileErrorCode::kIo: return "io";
    case FileErrorCode::kBadMagic: return "bad-magic";
    case FileErrorCode::kVersionMismatch: return "version-mismatch";
    case FileErrorCode::kTruncated: return "truncated";
    case FileErrorCode::kChecksumMismatch: return "checksum-mismatch";
    case FileErrorCode::kMalformed: return "malformed";
    case FileErrorCode::kConfigMismatch: return "config-mismatch";
  }
  return "unknown";
}

class FileError : public DataError {
 public:
  FileError(FileErrorCode code, const std::string& path, const std::string& detail)
      : DataError(path + ": " + to_string(code) + (detail.empty() ? "" : " (" + detail + ")")),
        code_(code) {}

  FileErrorCode code() const noexcept { return code_; }

 private:
  FileErrorCode code_;
};

}  // namespace humot
