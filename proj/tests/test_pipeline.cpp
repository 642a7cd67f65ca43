#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "hpcplp/errors.hpp"
#include "hpcplp/pipeline.hpp"
#include "hpcplp/prompts.hpp"
#include "hpcplp/rng.hpp"

using namespace hpcplp;
namespace fs = std::filesystem;

namespace {

std::string golden(const std::string& name) {
  std::ifstream in(fs::path(HPCPLP_GOLDEN_DIR) / name, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset parse(const std::string& text, DatasetSchema schema) {
  std::istringstream in(text);
  return parse_jsonl(in, schema, "inline");
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ModelHandle classifier(const fs::path& file, const nlohmann::json& table) {
  std::ofstream(file) << table.dump();
  return from_pretrained("mock:classifier:" + file.string());
}

PipelineSpec spec_for(Task task, ModelHandle model) {
  PipelineSpec s;
  s.task = task;
  s.model = std::move(model);
  s.config.seed = 42;
  return s;
}

Dataset similarity_pairs(std::size_t n) {
  Dataset ds{DatasetSchema::SimilarityPairs, {}, "pairs"};
  for (std::size_t i = 0; i < n; ++i) {
    Record r;
    r.fields["id"] = static_cast<std::int64_t>(i);
    r.fields["code_1"] = "int f() { return " + std::to_string(i) + "; }";
    r.fields["code_2"] = "int g() { return " + std::to_string(i % 3) + "; }";
    r.fields["label"] = static_cast<std::int64_t>(i % 2);
    ds.records.push_back(r);
  }
  return ds;
}

// Oracle for parse_binary_answer, written with <regex>.
Verdict oracle_parse(const std::string& text) {
  static const std::regex run("[A-Za-z0-9]+");
  bool first = true;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), run); it != std::sregex_iterator();
       ++it) {
    std::string w = it->str();
    for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (w == "1" || w == "yes") return {1, text, first ? ParseStatus::Parsed : ParseStatus::Fallback};
    if (w == "0" || w == "no") return {0, text, first ? ParseStatus::Parsed : ParseStatus::Fallback};
    first = false;
  }
  return {0, text, ParseStatus::Unparseable};
}

}  // namespace

TEST_CASE("prompts match the golden files byte for byte") {
  CHECK(build_similarity_prompt("a", "b") == golden("similarity_prompt.txt"));
  CHECK(build_parallelism_prompt("a") == golden("parallelism_prompt.txt"));
  CHECK(build_qa_prompt("What is a worksharing construct in OpenMP?") == golden("qa_prompt.txt"));
  const std::vector<std::string> chunks = {"The for construct splits loop iterations.",
                                           "A team of threads executes a parallel region."};
  CHECK(build_qa_prompt("What is a worksharing construct in OpenMP?", chunks) ==
        golden("qa_context_prompt.txt"));
}

TEST_CASE("prompt substitution is single pass") {
  const auto p = build_similarity_prompt("{code_2}", "int main() {}");
  CHECK(p.find("Code 1: {code_2} Code 2: int main() {}  Determine") == 0);
  CHECK(build_parallelism_prompt("{code}").find("Code: {code}. Answer") != std::string::npos);
  CHECK(build_similarity_prompt("", "") ==
        "Code 1:  Code 2:   Determine whether the two code snippets are similar. If the code "
        "snippets are similar, output 1; otherwise, output 0.");
  CHECK(build_qa_prompt("") == "You are an OpenMP expert. Please answer this question. Question: ");
}

TEST_CASE("parse_binary_answer examples") {
  auto v = parse_binary_answer("Yes, this loop can be parallelized");
  CHECK(v.label == 1);
  CHECK(v.parse_status == ParseStatus::Parsed);
  CHECK(v.raw_text == "Yes, this loop can be parallelized");
  v = parse_binary_answer("0");
  CHECK(v.label == 0);
  CHECK(v.parse_status == ParseStatus::Parsed);
  v = parse_binary_answer("The snippets compute different things");
  CHECK(v.label == 0);
  CHECK(v.parse_status == ParseStatus::Unparseable);
  v = parse_binary_answer("I think the answer is no.");
  CHECK(v.label == 0);
  CHECK(v.parse_status == ParseStatus::Fallback);
  v = parse_binary_answer("Output: 1");
  CHECK(v.label == 1);
  CHECK(v.parse_status == ParseStatus::Fallback);
  CHECK(parse_binary_answer("nothing here").parse_status == ParseStatus::Unparseable);
  CHECK(parse_binary_answer("10").parse_status == ParseStatus::Unparseable);
  CHECK(parse_binary_answer("").parse_status == ParseStatus::Unparseable);
}

TEST_CASE("property: parse_binary_answer agrees with a regex oracle") {
  const std::vector<std::string> words = {"yes", "No", "1", "0", "maybe", "10", "YES", "the", "snow",
                                          "n0", "", "!", ",", "  ", "\n", "no.", "(1)"};
  SplitMix64 rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string text;
    for (std::uint64_t k = 0, n = rng.below(6); k < n; ++k) {
      text += words[rng.below(words.size())];
      if (rng.below(2)) text += ' ';
    }
    CAPTURE(text);
    CHECK(parse_binary_answer(text) == oracle_parse(text));
  }
}

TEST_CASE("run: similarity through a classifier table keyed by the golden prompt") {
  TempDir dir("hpcplp_pipeline_cls");
  const auto model = classifier(dir.path / "t.json", {{golden("similarity_prompt.txt"), "1"}});
  Record r;
  r.fields["id"] = "p0";
  r.fields["code_1"] = "a";
  r.fields["code_2"] = "b";
  r.fields["label"] = std::int64_t{1};
  const auto result = run(spec_for(Task::CodeSimilarity, model), r);
  const auto& v = std::get<Verdict>(result);
  CHECK(v.label == 1);
  CHECK(v.parse_status == ParseStatus::Parsed);
  CHECK(v.raw_text == "1");

  r.fields["code_2"] = "c";
  try {
    run(spec_for(Task::CodeSimilarity, model), r);
    FAIL("expected LookupMiss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LookupMiss);
    CHECK(std::string(e.what()).find("item p0") != std::string::npos);
  }
}

TEST_CASE("run: parallelism over a constant 'no' model labels everything 0") {
  const auto ds = parse(
      "{\"id\":1,\"code\":\"for (i=0;i<n;i++) a[i]=b[i];\",\"parallelizable\":1}\n"
      "{\"id\":2,\"code\":\"for (i=1;i<n;i++) a[i]=a[i-1];\",\"parallelizable\":0}\n",
      DatasetSchema::ParallelismLabel);
  const auto spec = spec_for(Task::ParallelismDetection, from_pretrained("mock:const:no"));
  for (const auto& item : run_batch(spec, ds)) {
    REQUIRE(item.ok());
    CHECK(std::get<Verdict>(*item.result).label == 0);
  }
}

TEST_CASE("run: direct classifier path sees the raw code") {
  TempDir dir("hpcplp_pipeline_direct");
  const auto model = classifier(dir.path / "t.json", {{"x = 1;", "1"}, {"a\nb", "0"}});
  auto spec = spec_for(Task::ParallelismDetection, model);
  spec.direct = true;
  Record r;
  r.fields["id"] = "d";
  r.fields["code"] = "x = 1;";
  r.fields["parallelizable"] = std::int64_t{1};
  CHECK(std::get<Verdict>(run(spec, r)).label == 1);

  spec.task = Task::CodeSimilarity;
  Record pair;
  pair.fields["id"] = "p";
  pair.fields["code_1"] = "a";
  pair.fields["code_2"] = "b";
  pair.fields["label"] = std::int64_t{0};
  CHECK(std::get<Verdict>(run(spec, pair)).label == 0);
}

TEST_CASE("run: question answering with context from a 3-chunk store") {
  const auto embedder = from_pretrained("mock:echo");
  VectorStore store(embedder.embedding_dim);
  const std::string doc =
      "parallel for splits loop iterations among threads "
      "reduction combines private copies at the end "
      "target offloads a region to accelerator devices";
  const auto chunks = chunk_document(doc, 7, 0, "doc");
  REQUIRE(chunks.size() == 3);
  index(store, chunks, embedder);

  auto spec = spec_for(Task::OpenMPQA, from_pretrained("mock:echo"));
  spec.augmenter = Augmenter{&store, embedder, 4, 1000};
  Record q;
  q.fields["id"] = "q1";
  q.fields["category"] = "Basics";
  q.fields["question"] = "What does reduction do?";
  q.fields["reference_answer"] = "It combines private copies.";
  const auto answer = std::get<Answer>(run(spec, q));
  CHECK(answer.context_chunks_used == 3);
  CHECK(answer.text.find("Context:") != std::string::npos);
  CHECK(answer.text.find("reduction combines private copies") != std::string::npos);
  CHECK(answer.prompt_tokens_estimate == estimate_tokens(answer.text));

  spec.augmenter->token_budget = estimate_tokens(build_qa_prompt("What does reduction do?"));
  CHECK(std::get<Answer>(run(spec, q)).context_chunks_used == 0);

  spec.augmenter.reset();
  const auto plain = std::get<Answer>(run(spec, q));
  CHECK(plain.text == build_qa_prompt("What does reduction do?"));
  CHECK(plain.context_chunks_used == 0);
}

TEST_CASE("run rejects mismatched inputs and specs") {
  Record qa;
  qa.fields["id"] = "q";
  qa.fields["question"] = "?";
  try {
    run(spec_for(Task::CodeSimilarity, from_pretrained("mock:echo")), qa);
    FAIL("expected SchemaMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaMismatch);
  }
  const auto embedder = from_pretrained("mock:echo");
  VectorStore store(64);
  auto spec = spec_for(Task::CodeSimilarity, embedder);
  spec.augmenter = Augmenter{&store, embedder, 1, 10};
  CHECK_THROWS_AS(spec.validate(), Error);
  CHECK_THROWS_AS(run_batch(spec_for(Task::OpenMPQA, embedder), similarity_pairs(2)), Error);
}

TEST_CASE("run_batch keeps order for any parallelism and isolates failures") {
  const auto ds = similarity_pairs(40);
  const auto spec = spec_for(Task::CodeSimilarity, from_pretrained("mock:echo"));
  const auto serial = run_batch(spec, ds, 1);
  REQUIRE(serial.size() == 40);
  for (std::size_t p : {2u, 4u, 7u, 64u}) {
    const auto par = run_batch(spec, ds, p);
    REQUIRE(par.size() == serial.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
      CHECK(par[i].id == serial[i].id);
      CHECK(to_json(par[i]) == to_json(serial[i]));
    }
  }
  CHECK(run_batch(spec, Dataset{DatasetSchema::SimilarityPairs, {}, ""}, 4).empty());

  TempDir dir("hpcplp_pipeline_batch");
  nlohmann::json table = nlohmann::json::object();
  for (const auto& r : ds.records) {
    if (r.id() != "17") table[build_similarity_prompt(r.text("code_1"), r.text("code_2"))] = "0";
  }
  const auto partial = run_batch(spec_for(Task::CodeSimilarity, classifier(dir.path / "t.json", table)), ds, 4);
  std::size_t ok = 0;
  for (const auto& item : partial) {
    if (item.ok()) {
      ++ok;
    } else {
      CHECK(item.id == "17");
      CHECK(item.error_code == ErrorCode::LookupMiss);
    }
  }
  CHECK(ok == 39);
}

TEST_CASE("batch items round-trip through JSON") {
  BatchItem v{"a", Verdict{1, "yes", ParseStatus::Parsed}, std::nullopt, ""};
  BatchItem a{"b", Answer{"text", 2, 30}, std::nullopt, ""};
  BatchItem e{"c", std::nullopt, ErrorCode::Timeout, "slow"};
  for (const auto& item : {v, a, e}) {
    const auto back = batch_item_from_json(to_json(item));
    CHECK(back.id == item.id);
    CHECK(back.result == item.result);
    CHECK(back.error == item.error);
  }
}
