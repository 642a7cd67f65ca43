#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace hpcplp {

enum class DatasetSchema { CodeClassification, ParallelismLabel, SimilarityPairs, QA };

std::string_view to_string(DatasetSchema schema);
/// Accepts the enum spelling or snake_case ("code_classification", "qa", ...).
/// Throws Error(InvalidArgument).
DatasetSchema parse_schema(std::string_view name);

/// The four OMPQA question categories.
inline constexpr std::array<std::string_view, 4> kQaCategories = {"Basics", "Examples",
                                                                   "Compilers", "Benchmarks"};

using FieldValue = std::variant<std::int64_t, double, std::string>;

struct Record {
  std::map<std::string, FieldValue> fields;

  bool has(const std::string& key) const { return fields.contains(key); }
  const FieldValue& at(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::optional<std::string> optional_text(const std::string& key) const;
  /// The id field rendered as a string (integers in decimal).
  std::string id() const;

  friend bool operator==(const Record&, const Record&) = default;
};

std::string to_string(const FieldValue& value);

/// Ordered, schema-validated records. Transforms never mutate their input.
struct Dataset {
  DatasetSchema schema = DatasetSchema::CodeClassification;
  std::vector<Record> records;
  std::string provenance;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }

  /// Equality ignores provenance.
  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.schema == b.schema && a.records == b.records;
  }
};

/// Checks one JSON object against a schema and converts it. `line` is only
/// used for error reporting. Throws SchemaError.
Record record_from_json(const nlohmann::json& j, DatasetSchema schema, std::size_t line);
nlohmann::json to_json(const Record& record);

/// Reads JSONL (one record per line; blank lines skipped). Throws
/// Error(IoError) or SchemaError(line, field). Ids must be unique.
Dataset load(const std::filesystem::path& path, DatasetSchema schema);
Dataset parse_jsonl(std::istream& in, DatasetSchema schema, std::string provenance);

std::string to_jsonl(const Dataset& ds);

/// `<stem>.meta.json` next to a dataset file.
std::filesystem::path meta_path_for(const std::filesystem::path& path);

/// Writes the JSONL file and its meta sidecar. Throws Error(IoError).
void save(const Dataset& ds, const std::filesystem::path& path);

struct SplitSpec {
  std::array<double, 3> partition{0.8, 0.1, 0.1};  // train, valid, test
  std::uint64_t seed = 42;
};

struct DatasetSplits {
  Dataset train;
  Dataset valid;
  Dataset test;
};

/// Sizes of the three parts for n records. Train and valid are floor(n * f);
/// test takes floor(n * sum) minus those, so flooring losses land in test.
/// Throws Error(InvalidPartition).
std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& partition);

/// Seeded shuffle, then contiguous slices sized by split_sizes.
DatasetSplits split(const Dataset& ds, const SplitSpec& spec);

Dataset shuffle(const Dataset& ds, std::uint64_t seed);

/// Stable sort on one field. Numbers order numerically and before strings.
/// Throws Error(MissingField) when any record lacks the key.
Dataset sort(const Dataset& ds, const std::string& key, bool ascending);

struct PairSampling {
  std::size_t n_pairs = 0;
  double balance = 0.5;  // target fraction of label-1 pairs
  std::uint64_t seed = 42;
};

/// Draws code pairs from a CodeClassification dataset. label is 1 exactly when
/// both records share problem_label. Rejection sampling with at most
/// 100 * n_pairs draws; throws Error(InsufficientData) when the request cannot
/// be met. Output records also carry id_1 / id_2.
Dataset make_similarity_pairs(const Dataset& ds, const PairSampling& opts);

struct ScoreRow {
  std::string id_1;
  std::string id_2;
  double score = 0.0;
};

struct PairLabel {
  std::string id_1;
  std::string id_2;
  int label = 0;

  friend bool operator==(const PairLabel&, const PairLabel&) = default;
};

inline constexpr double kDefaultSimilarityThreshold = 0.5;

/// label = score >= threshold. Throws Error(OutOfRangeScore) for scores
/// outside [0, 1].
std::vector<PairLabel> binarize_similarity_scores(const std::vector<ScoreRow>& table,
                                                  double threshold = kDefaultSimilarityThreshold);

std::vector<ScoreRow> load_score_table(const std::filesystem::path& path);

struct DatasetStats {
  std::size_t count = 0;
  std::string field;  // the field the histogram is keyed on
  std::map<std::string, std::size_t> histogram;
};

/// Histogram over the schema's label field (category, problem_label,
/// parallelizable or label).
DatasetStats stats(const Dataset& ds);

}  // namespace hpcplp
