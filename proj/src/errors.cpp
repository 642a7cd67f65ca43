#include "hpcplp/errors.hpp"

#include <fmt/format.h>

namespace hpcplp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptySource: return "EmptySource";
    case ErrorCode::InvalidUtf8: return "InvalidUtf8";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnsupportedLanguage: return "UnsupportedLanguage";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::InvalidPartition: return "InvalidPartition";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::OutOfRangeScore: return "OutOfRangeScore";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::LookupMiss: return "LookupMiss";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::InvalidChunkParams: return "InvalidChunkParams";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DuplicateChunk: return "DuplicateChunk";
    case ErrorCode::EmptyStore: return "EmptyStore";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LanguageMismatch: return "LanguageMismatch";
  }
  return "Unknown";
}

SchemaError::SchemaError(std::size_t line, std::string field, const std::string& detail)
    : Error(ErrorCode::SchemaError,
            fmt::format("line {}: field '{}': {}", line, field, detail)),
      line_(line),
      field_(std::move(field)) {}

}  // namespace hpcplp
