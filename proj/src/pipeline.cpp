#include "hpcplp/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <thread>

#include <fmt/format.h>

#include "hpcplp/prompts.hpp"

namespace hpcplp {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool matches(std::string_view run, std::span<const std::string_view> markers) {
  return std::any_of(markers.begin(), markers.end(),
                     [&](std::string_view m) { return lower(m) == run; });
}

const std::string& require_text(const Record& r, const std::string& field, Task task) {
  const auto it = r.fields.find(field);
  if (it == r.fields.end() || !std::holds_alternative<std::string>(it->second)) {
    const std::string id = r.has("id") ? r.id() : std::string("?");
    throw Error(ErrorCode::SchemaMismatch,
                fmt::format("item {}: {} input needs a text field '{}'", id, to_string(task), field));
  }
  return std::get<std::string>(it->second);
}

[[noreturn]] void rethrow_with_id(const std::string& id) {
  try {
    throw;
  } catch (const HttpError& e) {
    throw HttpError(e.status(), fmt::format("item {}: {}", id, e.what()));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaMismatch) throw;
    throw Error(e.code(), fmt::format("item {}: {}", id, e.what()));
  }
}

}  // namespace

std::string_view to_string(Task task) {
  switch (task) {
    case Task::CodeSimilarity: return "CodeSimilarity";
    case Task::ParallelismDetection: return "ParallelismDetection";
    case Task::OpenMPQA: return "OpenMPQA";
  }
  return "?";
}

Task parse_task(std::string_view name) {
  const auto n = lower(name);
  if (n == "codesimilarity" || n == "similarity" || n == "code_similarity") return Task::CodeSimilarity;
  if (n == "parallelismdetection" || n == "parallelism" || n == "parallelism_detection")
    return Task::ParallelismDetection;
  if (n == "openmpqa" || n == "qa" || n == "openmp_qa") return Task::OpenMPQA;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown task '{}'", name));
}

DatasetSchema schema_for(Task task) {
  switch (task) {
    case Task::CodeSimilarity: return DatasetSchema::SimilarityPairs;
    case Task::ParallelismDetection: return DatasetSchema::ParallelismLabel;
    case Task::OpenMPQA: return DatasetSchema::QA;
  }
  return DatasetSchema::QA;
}

std::string_view to_string(ParseStatus status) {
  switch (status) {
    case ParseStatus::Parsed: return "Parsed";
    case ParseStatus::Fallback: return "Fallback";
    case ParseStatus::Unparseable: return "Unparseable";
  }
  return "?";
}

ParseStatus parse_status_from_string(std::string_view name) {
  if (name == "Parsed") return ParseStatus::Parsed;
  if (name == "Fallback") return ParseStatus::Fallback;
  if (name == "Unparseable") return ParseStatus::Unparseable;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown parse status '{}'", name));
}

Verdict parse_binary_answer(std::string_view text, std::span<const std::string_view> positive,
                            std::span<const std::string_view> negative) {
  Verdict v{0, std::string(text), ParseStatus::Unparseable};
  bool first = true;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
    const auto start = i;
    while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) break;
    const auto run = lower(text.substr(start, i - start));
    const bool pos = matches(run, positive);
    if (pos || matches(run, negative)) {
      v.label = pos ? 1 : 0;
      v.parse_status = first ? ParseStatus::Parsed : ParseStatus::Fallback;
      return v;
    }
    first = false;
  }
  return v;
}

void PipelineSpec::validate() const {
  config.validate();
  if (augmenter && task != Task::OpenMPQA) {
    throw Error(ErrorCode::InvalidConfig, "context augmentation only applies to question answering");
  }
  if (augmenter && !augmenter->store) throw Error(ErrorCode::InvalidConfig, "augmenter has no store");
  if (direct && task == Task::OpenMPQA) {
    throw Error(ErrorCode::InvalidConfig, "direct classification needs a binary task");
  }
}

std::string model_input(const PipelineSpec& spec, const Record& input, std::size_t* chunks_used) {
  if (chunks_used) *chunks_used = 0;
  switch (spec.task) {
    case Task::CodeSimilarity: {
      const auto& a = require_text(input, "code_1", spec.task);
      const auto& b = require_text(input, "code_2", spec.task);
      return spec.direct ? a + "\n" + b : build_similarity_prompt(a, b);
    }
    case Task::ParallelismDetection: {
      const auto& code = require_text(input, "code", spec.task);
      return spec.direct ? code : build_parallelism_prompt(code);
    }
    case Task::OpenMPQA: {
      const auto& q = require_text(input, "question", spec.task);
      if (!spec.augmenter) return build_qa_prompt(q);
      const auto& a = *spec.augmenter;
      auto r = augment(q, *a.store, a.embedder, a.k, a.token_budget, spec.backend);
      if (chunks_used) *chunks_used = r.context.size();
      return std::move(r.prompt);
    }
  }
  return {};
}

PipelineResult run(const PipelineSpec& spec, const Record& input) {
  spec.validate();
  const std::string id = input.has("id") ? input.id() : std::string("?");
  try {
    std::size_t chunks = 0;
    const auto prompt = model_input(spec, input, &chunks);
    const auto response = complete(spec.model, {prompt, spec.config}, spec.backend);
    if (spec.task == Task::OpenMPQA) {
      return Answer{response.text, chunks, estimate_tokens(prompt)};
    }
    return parse_binary_answer(response.text);
  } catch (const Error&) {
    rethrow_with_id(id);
  }
}

std::vector<BatchItem> run_batch(const PipelineSpec& spec, const Dataset& ds,
                                 std::size_t parallelism) {
  if (parallelism == 0) throw Error(ErrorCode::InvalidArgument, "parallelism must be at least 1");
  if (ds.schema != schema_for(spec.task)) {
    throw Error(ErrorCode::SchemaMismatch,
                fmt::format("{} needs a {} dataset, got {}", to_string(spec.task),
                            to_string(schema_for(spec.task)), to_string(ds.schema)));
  }
  spec.validate();

  std::vector<BatchItem> out(ds.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < ds.size(); i = next++) {
      const auto& record = ds.records[i];
      auto& item = out[i];
      item.id = record.id();
      try {
        item.result = run(spec, record);
      } catch (const Error& e) {
        item.error_code = e.code();
        item.error = e.what();
      } catch (const std::exception& e) {
        item.error = e.what();
      }
    }
  };

  const std::size_t n_threads = std::min(parallelism, ds.size());
  if (n_threads <= 1) {
    worker();
    return out;
  }
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return out;
}

nlohmann::json to_json(const BatchItem& item) {
  nlohmann::json j;
  j["id"] = item.id;
  if (!item.result) {
    j["error"] = item.error;
    j["error_code"] = item.error_code ? nlohmann::json(std::string(to_string(*item.error_code)))
                                      : nlohmann::json(nullptr);
    return j;
  }
  if (const auto* v = std::get_if<Verdict>(&*item.result)) {
    j["label"] = v->label;
    j["parse_status"] = std::string(to_string(v->parse_status));
    j["raw_text"] = v->raw_text;
  } else {
    const auto& a = std::get<Answer>(*item.result);
    j["answer"] = a.text;
    j["context_chunks_used"] = a.context_chunks_used;
    j["prompt_tokens_estimate"] = a.prompt_tokens_estimate;
  }
  return j;
}

BatchItem batch_item_from_json(const nlohmann::json& j) {
  BatchItem item;
  try {
    item.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    if (j.contains("error")) {
      item.error = j.at("error").get<std::string>();
      return item;
    }
    if (j.contains("label")) {
      Verdict v;
      v.label = j.at("label").get<int>();
      v.parse_status = parse_status_from_string(j.at("parse_status").get<std::string>());
      v.raw_text = j.at("raw_text").get<std::string>();
      if (v.label != 0 && v.label != 1) throw Error(ErrorCode::SchemaError, "label must be 0 or 1");
      item.result = v;
    } else {
      Answer a;
      a.text = j.at("answer").get<std::string>();
      a.context_chunks_used = j.value("context_chunks_used", std::size_t{0});
      a.prompt_tokens_estimate = j.value("prompt_tokens_estimate", std::size_t{0});
      item.result = a;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, fmt::format("malformed prediction: {}", e.what()));
  }
  return item;
}

}  // namespace hpcplp
