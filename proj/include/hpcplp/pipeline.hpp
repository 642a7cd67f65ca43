#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "hpcplp/context.hpp"
#include "hpcplp/dataset.hpp"
#include "hpcplp/errors.hpp"
#include "hpcplp/model.hpp"

namespace hpcplp {

enum class Task { CodeSimilarity, ParallelismDetection, OpenMPQA };

std::string_view to_string(Task task);
/// Accepts the enum spelling or "similarity", "parallelism", "qa".
/// Throws Error(InvalidArgument).
Task parse_task(std::string_view name);
DatasetSchema schema_for(Task task);

enum class ParseStatus { Parsed, Fallback, Unparseable };
std::string_view to_string(ParseStatus status);
ParseStatus parse_status_from_string(std::string_view name);

struct Verdict {
  int label = 0;
  std::string raw_text;
  ParseStatus parse_status = ParseStatus::Unparseable;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

struct Answer {
  std::string text;
  std::size_t context_chunks_used = 0;
  std::size_t prompt_tokens_estimate = 0;

  friend bool operator==(const Answer&, const Answer&) = default;
};

using PipelineResult = std::variant<Verdict, Answer>;

inline constexpr std::array<std::string_view, 2> kPositiveMarkers = {"1", "yes"};
inline constexpr std::array<std::string_view, 2> kNegativeMarkers = {"0", "no"};

/// Scans the maximal ASCII alphanumeric runs of `text`, case-insensitively,
/// for the first one equal to a marker. Parsed when that run is the first
/// run of the text, Fallback when it comes later, Unparseable (label 0) when
/// none matches.
Verdict parse_binary_answer(std::string_view text,
                            std::span<const std::string_view> positive = kPositiveMarkers,
                            std::span<const std::string_view> negative = kNegativeMarkers);

/// Retrieval settings for question answering.
struct Augmenter {
  const VectorStore* store = nullptr;
  ModelHandle embedder;
  std::size_t k = kDefaultTopK;
  std::size_t token_budget = kDefaultTokenBudget;
};

struct PipelineSpec {
  Task task = Task::CodeSimilarity;
  ModelHandle model;
  SamplingConfig config;
  std::optional<Augmenter> augmenter;  // OpenMPQA only
  /// Direct classifier path: the model sees the raw input (the code, or both
  /// codes joined by a newline) instead of the prompt.
  bool direct = false;
  BackendOptions backend;

  /// Throws Error(InvalidConfig).
  void validate() const;
};

/// Text sent to the model for one record.
std::string model_input(const PipelineSpec& spec, const Record& input,
                        std::size_t* chunks_used = nullptr);

/// Builds the prompt, calls the model and parses the reply. Throws
/// Error(SchemaMismatch) when the record lacks the task's fields; backend
/// errors are rethrown with the record id in the message.
PipelineResult run(const PipelineSpec& spec, const Record& input);

struct BatchItem {
  std::string id;
  std::optional<PipelineResult> result;
  std::optional<ErrorCode> error_code;
  std::string error;

  bool ok() const noexcept { return result.has_value(); }
};

/// Runs every record, up to `parallelism` at a time. Results come back in
/// dataset order; a failing record becomes an error entry and the batch goes
/// on. Throws Error(SchemaMismatch) when the dataset schema does not fit the
/// task.
std::vector<BatchItem> run_batch(const PipelineSpec& spec, const Dataset& ds,
                                 std::size_t parallelism = 1);

nlohmann::json to_json(const BatchItem& item);
BatchItem batch_item_from_json(const nlohmann::json& j);

}  // namespace hpcplp
