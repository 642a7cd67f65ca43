#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hpcplp {

enum class ErrorCode {
  // tokenizer
  EmptySource,
  InvalidUtf8,
  ParseError,
  UnsupportedLanguage,
  // datasets
  IoError,
  SchemaError,
  InvalidPartition,
  MissingField,
  InsufficientData,
  OutOfRangeScore,
  // models
  UnknownModel,
  InvalidConfig,
  HttpError,
  Timeout,
  MalformedResponse,
  LookupMiss,
  Unsupported,
  // pipelines / retrieval / metrics
  SchemaMismatch,
  InvalidChunkParams,
  DimensionMismatch,
  DuplicateChunk,
  EmptyStore,
  InvalidArgument,
  LengthMismatch,
  EmptyInput,
  LanguageMismatch,
};

std::string_view to_string(ErrorCode code);

/// Base of every error the library throws. The code is stable and is what
/// the CLI maps to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t position, const std::string& message)
      : Error(ErrorCode::ParseError, message), position_(position) {}

  /// Byte offset of the first error or missing node.
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, std::string field, const std::string& detail);

  /// 1-based line number in the source JSONL file.
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

class HttpError : public Error {
 public:
  HttpError(int status, const std::string& message)
      : Error(ErrorCode::HttpError, message), status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace hpcplp
