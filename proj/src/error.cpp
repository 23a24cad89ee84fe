#include "iqaforge/error.hpp"

namespace iqaforge {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::QualityOutOfRange: return "QualityOutOfRange";
    case ErrorCode::CropLargerThanImage: return "CropLargerThanImage";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptyRatings: return "EmptyRatings";
    case ErrorCode::ValueOutsideNativeRange: return "ValueOutsideNativeRange";
    case ErrorCode::MissingDescriptor: return "MissingDescriptor";
    case ErrorCode::InfeasiblePolicy: return "InfeasiblePolicy";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateVector: return "DegenerateVector";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::NoForwardState: return "NoForwardState";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::StepOutOfRange: return "StepOutOfRange";
    case ErrorCode::EmptyPartition: return "EmptyPartition";
    case ErrorCode::EmptyTestSet: return "EmptyTestSet";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

ErrorCategory error_category(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::IoError:
      return ErrorCategory::Io;
    case ErrorCode::Internal:
    case ErrorCode::NoForwardState:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::DimensionMismatch:
      return ErrorCategory::Internal;
    default:
      return ErrorCategory::Validation;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace iqaforge
