#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iqaforge {

enum class ErrorCode {
  InvalidArgument,
  MalformedFile,
  UnsupportedFormat,
  QualityOutOfRange,
  CropLargerThanImage,
  InvalidSpec,
  IoError,
  EmptyRatings,
  ValueOutsideNativeRange,
  MissingDescriptor,
  InfeasiblePolicy,
  DuplicateId,
  LengthMismatch,
  DegenerateVector,
  EmptyInput,
  ImageTooSmall,
  DimensionMismatch,
  EmptyCorpus,
  NoForwardState,
  ShapeMismatch,
  StepOutOfRange,
  EmptyPartition,
  EmptyTestSet,
  Internal,
};

// Coarse classification used for process exit codes.
enum class ErrorCategory { Validation = 1, Io = 2, Internal = 3 };

std::string_view error_code_name(ErrorCode code) noexcept;
ErrorCategory error_category(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return error_category(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace iqaforge
