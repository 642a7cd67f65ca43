#include "hpcplp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "hpcplp/errors.hpp"
#include "hpcplp/rng.hpp"

namespace hpcplp {

namespace {

enum class FieldType { Id, Text, Integer, Flag, Category };

struct FieldRule {
  std::string_view name;
  FieldType type;
  bool required;
};

std::vector<FieldRule> rules_for(DatasetSchema schema) {
  switch (schema) {
    case DatasetSchema::CodeClassification:
      return {{"id", FieldType::Id, true},
              {"code", FieldType::Text, true},
              {"problem_label", FieldType::Integer, true}};
    case DatasetSchema::ParallelismLabel:
      return {{"id", FieldType::Id, true},
              {"code", FieldType::Text, true},
              {"parallelizable", FieldType::Flag, true},
              {"directive", FieldType::Text, false}};
    case DatasetSchema::SimilarityPairs:
      return {{"id", FieldType::Id, true},
              {"code_1", FieldType::Text, true},
              {"code_2", FieldType::Text, true},
              {"label", FieldType::Flag, true}};
    case DatasetSchema::QA:
      return {{"id", FieldType::Id, true},
              {"category", FieldType::Category, true},
              {"question", FieldType::Text, true},
              {"reference_answer", FieldType::Text, true}};
  }
  return {};
}

std::string_view label_field(DatasetSchema schema) {
  switch (schema) {
    case DatasetSchema::CodeClassification: return "problem_label";
    case DatasetSchema::ParallelismLabel: return "parallelizable";
    case DatasetSchema::SimilarityPairs: return "label";
    case DatasetSchema::QA: return "category";
  }
  return "id";
}

std::optional<FieldValue> scalar_from_json(const nlohmann::json& v) {
  if (v.is_string()) return FieldValue{v.get<std::string>()};
  if (v.is_number_integer()) return FieldValue{v.get<std::int64_t>()};
  if (v.is_number_float()) return FieldValue{v.get<double>()};
  if (v.is_boolean()) return FieldValue{std::int64_t{v.get<bool>() ? 1 : 0}};
  return std::nullopt;
}

void check_field(const FieldRule& rule, const FieldValue& value, std::size_t line) {
  const std::string name(rule.name);
  switch (rule.type) {
    case FieldType::Id:
      if (std::holds_alternative<double>(value))
        throw SchemaError(line, name, "id must be a string or an integer");
      break;
    case FieldType::Text:
      if (!std::holds_alternative<std::string>(value))
        throw SchemaError(line, name, "expected a string");
      break;
    case FieldType::Integer:
      if (!std::holds_alternative<std::int64_t>(value))
        throw SchemaError(line, name, "expected an integer");
      break;
    case FieldType::Flag: {
      const auto* v = std::get_if<std::int64_t>(&value);
      if (v == nullptr || (*v != 0 && *v != 1)) throw SchemaError(line, name, "expected 0 or 1");
      break;
    }
    case FieldType::Category: {
      const auto* v = std::get_if<std::string>(&value);
      if (v == nullptr ||
          std::find(kQaCategories.begin(), kQaCategories.end(), *v) == kQaCategories.end())
        throw SchemaError(line, name, "expected one of Basics, Examples, Compilers, Benchmarks");
      break;
    }
  }
}

// Total order used by sort(): numbers (compared numerically) before strings.
int compare(const FieldValue& a, const FieldValue& b) {
  const bool a_str = std::holds_alternative<std::string>(a);
  const bool b_str = std::holds_alternative<std::string>(b);
  if (a_str != b_str) return a_str ? 1 : -1;
  if (a_str) {
    const int c = std::get<std::string>(a).compare(std::get<std::string>(b));
    return (c > 0) - (c < 0);
  }
  if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b)) {
    const auto x = std::get<std::int64_t>(a);
    const auto y = std::get<std::int64_t>(b);
    return (x > y) - (x < y);
  }
  auto num = [](const FieldValue& v) {
    return std::holds_alternative<double>(v) ? std::get<double>(v)
                                             : static_cast<double>(std::get<std::int64_t>(v));
  };
  const double x = num(a);
  const double y = num(b);
  return (x > y) - (x < y);
}

Dataset with_records(const Dataset& ds, std::vector<Record> records, std::string provenance) {
  return Dataset{ds.schema, std::move(records), std::move(provenance)};
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", path.string()));
  out << contents;
  out.close();
  if (!out) throw Error(ErrorCode::IoError, fmt::format("failed writing '{}'", path.string()));
}

}  // namespace

std::string_view to_string(DatasetSchema schema) {
  switch (schema) {
    case DatasetSchema::CodeClassification: return "CodeClassification";
    case DatasetSchema::ParallelismLabel: return "ParallelismLabel";
    case DatasetSchema::SimilarityPairs: return "SimilarityPairs";
    case DatasetSchema::QA: return "QA";
  }
  return "CodeClassification";
}

DatasetSchema parse_schema(std::string_view name) {
  std::string n;
  for (char c : name) {
    if (c != '_' && c != '-') n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (n == "codeclassification" || n == "classification") return DatasetSchema::CodeClassification;
  if (n == "parallelismlabel" || n == "parallelism") return DatasetSchema::ParallelismLabel;
  if (n == "similaritypairs" || n == "similarity" || n == "pairs") return DatasetSchema::SimilarityPairs;
  if (n == "qa" || n == "ompqa") return DatasetSchema::QA;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown dataset schema '{}'", name));
}

const FieldValue& Record::at(const std::string& key) const {
  auto it = fields.find(key);
  if (it == fields.end()) throw Error(ErrorCode::MissingField, fmt::format("record has no field '{}'", key));
  return it->second;
}

const std::string& Record::text(const std::string& key) const {
  const auto* s = std::get_if<std::string>(&at(key));
  if (s == nullptr) throw Error(ErrorCode::SchemaMismatch, fmt::format("field '{}' is not a string", key));
  return *s;
}

std::int64_t Record::integer(const std::string& key) const {
  const auto* v = std::get_if<std::int64_t>(&at(key));
  if (v == nullptr) throw Error(ErrorCode::SchemaMismatch, fmt::format("field '{}' is not an integer", key));
  return *v;
}

std::optional<std::string> Record::optional_text(const std::string& key) const {
  auto it = fields.find(key);
  if (it == fields.end()) return std::nullopt;
  if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  return std::nullopt;
}

std::string Record::id() const { return has("id") ? to_string(at("id")) : std::string(); }

std::string to_string(const FieldValue& value) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<T, double>) {
          return nlohmann::json(v).dump();
        } else {
          return std::to_string(v);
        }
      },
      value);
}

Record record_from_json(const nlohmann::json& j, DatasetSchema schema, std::size_t line) {
  if (!j.is_object()) throw SchemaError(line, "", "record is not a JSON object");
  Record rec;
  for (const auto& [key, value] : j.items()) {
    if (value.is_null()) continue;
    auto scalar = scalar_from_json(value);
    if (!scalar) throw SchemaError(line, key, "unsupported value type (arrays/objects not allowed)");
    rec.fields.emplace(key, std::move(*scalar));
  }
  for (const auto& rule : rules_for(schema)) {
    auto it = rec.fields.find(std::string(rule.name));
    if (it == rec.fields.end()) {
      if (rule.required) throw SchemaError(line, std::string(rule.name), "missing required field");
      continue;
    }
    check_field(rule, it->second, line);
  }
  return rec;
}

nlohmann::json to_json(const Record& record) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, value] : record.fields) {
    std::visit([&](const auto& v) { j[key] = v; }, value);
  }
  return j;
}

Dataset parse_jsonl(std::istream& in, DatasetSchema schema, std::string provenance) {
  Dataset ds{schema, {}, std::move(provenance)};
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(line_no, "", fmt::format("invalid JSON: {}", e.what()));
    }
    Record rec = record_from_json(j, schema, line_no);
    if (!ids.insert(rec.id()).second) throw SchemaError(line_no, "id", "duplicate id " + rec.id());
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

Dataset load(const std::filesystem::path& path, DatasetSchema schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open dataset '{}'", path.string()));
  return parse_jsonl(in, schema, path.string());
}

std::string to_jsonl(const Dataset& ds) {
  std::string out;
  for (const auto& r : ds.records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::filesystem::path meta_path_for(const std::filesystem::path& path) {
  auto meta = path;
  meta.replace_extension(".meta.json");
  return meta;
}

void save(const Dataset& ds, const std::filesystem::path& path) {
  write_file(path, to_jsonl(ds));
  const nlohmann::json meta = {{"schema", to_string(ds.schema)},
                               {"record_count", ds.size()},
                               {"provenance", ds.provenance}};
  write_file(meta_path_for(path), meta.dump(2) + "\n");
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& partition) {
  double sum = 0.0;
  for (double f : partition) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw Error(ErrorCode::InvalidPartition, fmt::format("partition fraction {} outside [0, 1]", f));
    }
    sum += f;
  }
  if (sum > 1.0 + 1e-9) {
    throw Error(ErrorCode::InvalidPartition, fmt::format("partition sums to {} > 1", sum));
  }
  // The epsilon keeps products like 100 * 0.29 from flooring one short.
  constexpr double eps = 1e-9;
  const auto nd = static_cast<double>(n);
  auto floor_of = [&](double x) { return static_cast<std::size_t>(std::floor(nd * x + eps)); };
  const std::size_t train = std::min(n, floor_of(partition[0]));
  const std::size_t valid = std::min(n - train, floor_of(partition[1]));
  const std::size_t taken = std::abs(sum - 1.0) <= 1e-9 ? n : std::min(n, floor_of(sum));
  const std::size_t test = taken > train + valid ? taken - train - valid : 0;
  return {train, valid, test};
}

DatasetSplits split(const Dataset& ds, const SplitSpec& spec) {
  const auto sizes = split_sizes(ds.size(), spec.partition);
  const Dataset shuffled = shuffle(ds, spec.seed);
  auto slice = [&](std::size_t from, std::size_t count, std::string_view part) {
    std::vector<Record> recs(shuffled.records.begin() + static_cast<std::ptrdiff_t>(from),
                             shuffled.records.begin() + static_cast<std::ptrdiff_t>(from + count));
    return with_records(ds, std::move(recs), fmt::format("{}#{}", ds.provenance, part));
  };
  return {slice(0, sizes[0], "train"), slice(sizes[0], sizes[1], "valid"),
          slice(sizes[0] + sizes[1], sizes[2], "test")};
}

Dataset shuffle(const Dataset& ds, std::uint64_t seed) {
  std::vector<Record> recs = ds.records;
  seeded_shuffle(recs, seed);
  return with_records(ds, std::move(recs), ds.provenance);
}

Dataset sort(const Dataset& ds, const std::string& key, bool ascending) {
  for (const auto& r : ds.records) {
    if (!r.has(key)) {
      throw Error(ErrorCode::MissingField,
                  fmt::format("record '{}' has no field '{}' to sort by", r.id(), key));
    }
  }
  std::vector<Record> recs = ds.records;
  std::stable_sort(recs.begin(), recs.end(), [&](const Record& a, const Record& b) {
    const int c = compare(a.at(key), b.at(key));
    return ascending ? c < 0 : c > 0;
  });
  return with_records(ds, std::move(recs), ds.provenance);
}

Dataset make_similarity_pairs(const Dataset& ds, const PairSampling& opts) {
  if (ds.schema != DatasetSchema::CodeClassification) {
    throw Error(ErrorCode::SchemaMismatch, "pair sampling needs a CodeClassification dataset");
  }
  if (!(opts.balance >= 0.0 && opts.balance <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "balance must lie in [0, 1]");
  }
  const std::size_t n = ds.size();
  const auto n_pos = static_cast<std::size_t>(std::llround(static_cast<double>(opts.n_pairs) * opts.balance));
  const std::size_t n_neg = opts.n_pairs - n_pos;

  std::map<std::int64_t, std::size_t> per_label;
  for (const auto& r : ds.records) ++per_label[r.integer("problem_label")];
  const bool can_pos = std::any_of(per_label.begin(), per_label.end(),
                                   [](const auto& kv) { return kv.second >= 2; });
  const bool can_neg = per_label.size() >= 2;
  if (n < 2 || (n_pos > 0 && !can_pos) || (n_neg > 0 && !can_neg)) {
    throw Error(ErrorCode::InsufficientData,
                fmt::format("cannot draw {} positive / {} negative pairs from {} records over {} labels",
                            n_pos, n_neg, n, per_label.size()));
  }

  SplitMix64 rng(opts.seed);
  std::vector<Record> pairs;
  pairs.reserve(opts.n_pairs);
  const std::size_t max_attempts = 100 * opts.n_pairs;
  std::size_t attempts = 0;
  for (std::size_t i = 0; i < opts.n_pairs; ++i) {
    const bool want_positive = i < n_pos;
    while (true) {
      if (attempts++ >= max_attempts) {
        throw Error(ErrorCode::InsufficientData,
                    fmt::format("pair sampling gave up after {} draws", max_attempts));
      }
      const auto a = static_cast<std::size_t>(rng.below(n));
      const auto b = static_cast<std::size_t>(rng.below(n));
      if (a == b) continue;
      const Record& ra = ds.records[a];
      const Record& rb = ds.records[b];
      const bool same = ra.integer("problem_label") == rb.integer("problem_label");
      if (same != want_positive) continue;
      Record pair;
      pair.fields["code_1"] = ra.text("code");
      pair.fields["code_2"] = rb.text("code");
      pair.fields["label"] = std::int64_t{same ? 1 : 0};
      pair.fields["id_1"] = ra.at("id");
      pair.fields["id_2"] = rb.at("id");
      pairs.push_back(std::move(pair));
      break;
    }
  }
  // Interleave positives and negatives, then number the pairs.
  seeded_shuffle(pairs, rng.next());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    pairs[i].fields["id"] = static_cast<std::int64_t>(i);
  }
  return Dataset{DatasetSchema::SimilarityPairs, std::move(pairs),
                 fmt::format("pairs({}, n={}, balance={}, seed={})", ds.provenance, opts.n_pairs,
                             opts.balance, opts.seed)};
}

std::vector<PairLabel> binarize_similarity_scores(const std::vector<ScoreRow>& table,
                                                  double threshold) {
  std::vector<PairLabel> out;
  out.reserve(table.size());
  for (const auto& row : table) {
    if (!(row.score >= 0.0 && row.score <= 1.0)) {
      throw Error(ErrorCode::OutOfRangeScore,
                  fmt::format("score {} for ({}, {}) outside [0, 1]", row.score, row.id_1, row.id_2));
    }
    out.push_back({row.id_1, row.id_2, row.score >= threshold ? 1 : 0});
  }
  return out;
}

std::vector<ScoreRow> load_score_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open score table '{}'", path.string()));
  std::vector<ScoreRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      auto id_text = [&](const char* key) {
        const auto& v = j.at(key);
        return v.is_string() ? v.get<std::string>() : v.dump();
      };
      rows.push_back({id_text("id_1"), id_text("id_2"), j.at("score").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(line_no, "", fmt::format("bad score row: {}", e.what()));
    }
  }
  return rows;
}

DatasetStats stats(const Dataset& ds) {
  DatasetStats out;
  out.count = ds.size();
  out.field = std::string(label_field(ds.schema));
  if (ds.schema == DatasetSchema::QA) {
    for (auto c : kQaCategories) out.histogram[std::string(c)] = 0;
  }
  for (const auto& r : ds.records) ++out.histogram[to_string(r.at(out.field))];
  return out;
}

}  // namespace hpcplp
