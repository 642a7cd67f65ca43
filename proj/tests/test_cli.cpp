#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "hpcplp/context.hpp"

using namespace hpcplp;
using hpcplp::cli::run_cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kToy = HPCPLP_TOY_DIR;
const fs::path kData = HPCPLP_TEST_DATA_DIR;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("tokenize keeps my_func whole and maps errors to exit codes") {
  TempDir dir("hpcplp_cli_tok");
  std::ofstream(dir / "f.c") << "int my_func(int x) { return x + 1; }\n";
  const auto r = invoke({"tokenize", dir / "f.c", "--mode", "ast"});
  REQUIRE(r.code == 0);
  const auto tokens = json::parse(r.out).at("tokens");
  CHECK(std::any_of(tokens.begin(), tokens.end(), [](const json& t) { return t.at("t") == "my_func"; }));
  CHECK(std::none_of(tokens.begin(), tokens.end(), [](const json& t) { return t.at("t") == "_"; }));

  CHECK(invoke({"tokenize", dir / "missing.c"}).code == 2);

  std::ofstream(dir / "notes.txt") << "just text\n";
  const auto unknown = invoke({"tokenize", dir / "notes.txt", "--mode", "ast"});
  CHECK(unknown.code == 3);
  CHECK(unknown.err.find("UnsupportedLanguage") != std::string::npos);

  CHECK(invoke({"tokenize", dir / "f.c", "--mode", "words"}).code == 2);
  CHECK(invoke({"tokenize", dir / "f.c", "--no-such-flag"}).code == 2);

  const auto graph = invoke({"tokenize", dir / "f.c", "--mode", "graph", "--out", dir / "g.json"});
  CHECK(graph.code == 0);
  CHECK(json::parse(read_file(dir / "g.json")).contains("edges"));
  CHECK(fs::exists(dir / "g.json.manifest.json"));
}

TEST_CASE("data stats reproduces the question category histogram") {
  const auto r = invoke({"data", "stats", (kData / "ompqa_fixture.jsonl").string(), "--schema", "qa"});
  REQUIRE(r.code == 0);
  const auto h = json::parse(r.out).at("histogram");
  CHECK(h.at("Basics") == 40);
  CHECK(h.at("Examples") == 20);
  CHECK(h.at("Compilers") == 24);
  CHECK(h.at("Benchmarks") == 23);
}

TEST_CASE("data split writes floor-rule sizes and repeats byte for byte") {
  TempDir dir("hpcplp_cli_split");
  const auto input = (kData / "ompqa_fixture.jsonl").string();
  const auto a = invoke({"data", "split", input, "--schema", "qa", "--partition", "0.8,0.1,0.1", "--out", dir / "a"});
  const auto b = invoke({"data", "split", input, "--schema", "qa", "--partition", "0.8,0.1,0.1", "--out", dir / "b"});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  // 107 records: floor(85.6) = 85, floor(10.7) = 10, the rest 12
  CHECK(json::parse(a.out) == json{{"train", 85}, {"valid", 10}, {"test", 12}});
  for (const char* part : {"train.jsonl", "valid.jsonl", "test.jsonl"}) {
    CHECK(read_file(dir.path / "a" / part) == read_file(dir.path / "b" / part));
  }
  const auto other = invoke({"--seed", "7", "data", "split", input, "--schema", "qa", "--out", dir / "c"});
  REQUIRE(other.code == 0);
  CHECK(read_file(dir.path / "a" / "train.jsonl") != read_file(dir.path / "c" / "train.jsonl"));

  CHECK(invoke({"data", "split", input, "--schema", "qa", "--partition", "0.8,0.3,0.1", "--out", dir / "d"}).code == 2);
  // the meta sidecar written by split supplies the schema
  CHECK(invoke({"data", "load", (dir.path / "a" / "test.jsonl").string()}).code == 0);
  CHECK(invoke({"data", "load", input}).code == 2);
}

TEST_CASE("ingest counts chunks over documents and is reproducible") {
  TempDir dir("hpcplp_cli_ingest");
  std::ofstream(dir / "one.txt") << "alpha beta gamma delta epsilon zeta eta theta";
  std::ofstream(dir / "two.txt") << "iota kappa lambda";
  const auto args = [&](const std::string& store) {
    return std::vector<std::string>{"ingest", dir / "one.txt", dir / "two.txt", "--chunk-size", "4", "--overlap",
                                    "1", "--model", "mock:echo", "--store", store};
  };
  REQUIRE(invoke(args(dir / "s1.jsonl")).code == 0);
  REQUIRE(invoke(args(dir / "s2.jsonl")).code == 0);
  const auto store = VectorStore::load(dir / "s1.jsonl");
  const auto expected = chunk_document("alpha beta gamma delta epsilon zeta eta theta", 4, 1).size() +
                        chunk_document("iota kappa lambda", 4, 1).size();
  CHECK(store.size() == expected);
  CHECK(read_file(dir / "s1.jsonl") == read_file(dir / "s2.jsonl"));

  auto bad = args(dir / "s3.jsonl");
  bad[6] = "4";  // overlap == chunk size
  CHECK(invoke(bad).code == 2);
  CHECK_FALSE(fs::exists(dir / "s3.jsonl"));
}

TEST_CASE("run records default sampling in its manifest and is reproducible") {
  TempDir dir("hpcplp_cli_run");
  const auto registry = (kToy / "models.json").string();
  const auto dataset = (kToy / "drb_toy.jsonl").string();
  const auto a = invoke({"run", "parallelism", "--model", "mock-table", "--registry", registry, "--dataset", dataset,
                      "--out", dir / "a.jsonl"});
  REQUIRE(a.code == 0);
  const auto manifest = json::parse(read_file(dir / "a.jsonl.manifest.json"));
  CHECK(manifest.at("flags").at("temperature") == 0.0);
  CHECK(manifest.at("flags").at("max_tokens") == 256);
  CHECK(manifest.at("seed") == 42);
  CHECK(manifest.at("model") == "mock-table");
  CHECK(manifest.at("config_hash").get<std::string>().size() == 16);

  REQUIRE(invoke({"run", "parallelism", "--model", "mock-table", "--registry", registry, "--dataset", dataset,
               "--parallelism", "4", "--out", dir / "b.jsonl"})
              .code == 0);
  CHECK(read_file(dir / "a.jsonl") == read_file(dir / "b.jsonl"));
  CHECK(count_lines(read_file(dir / "a.jsonl")) == 20);

  CHECK(invoke({"run", "parallelism", "--model", "no-such-model", "--registry", registry, "--dataset", dataset}).code ==
        2);
  CHECK(invoke({"run", "similarity", "--model", "mock:echo", "--dataset", dataset}).code == 2);
}

TEST_CASE("question answering with a store reports context chunks per row") {
  TempDir dir("hpcplp_cli_qa");
  REQUIRE(invoke({"ingest", (kToy / "openmp_notes.txt").string(), "--chunk-size", "48", "--overlap", "8", "--model",
               "mock:echo", "--store", dir / "notes.jsonl"})
              .code == 0);
  const auto r = invoke({"run", "qa", "--model", "mock:echo", "--dataset", (kToy / "ompqa_toy.jsonl").string(),
                      "--store", dir / "notes.jsonl", "--k", "2"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    const auto row = json::parse(line);
    CHECK(row.at("context_chunks_used") == 2);
    ++rows;
  }
  CHECK(rows == 12);
  // a store only makes sense for question answering
  CHECK(invoke({"run", "parallelism", "--model", "mock:echo", "--dataset", (kToy / "drb_toy.jsonl").string(),
             "--store", dir / "notes.jsonl"})
            .code == 2);
}

TEST_CASE("eval and board") {
  TempDir dir("hpcplp_cli_eval");
  const auto registry = (kToy / "models.json").string();
  const auto dataset = (kToy / "drb_toy.jsonl").string();

  std::ofstream(dir / "empty.jsonl").close();
  CHECK(invoke({"eval", "parallelism", "--dataset", dataset, "--predictions", dir / "empty.jsonl"}).code == 2);

  const auto e = invoke({"eval", "parallelism", "--dataset", dataset, "--model", "mock-table", "mock-yes", "mock-no",
                      "--registry", registry, "--out", dir / "reports.json"});
  REQUIRE(e.code == 0);
  const auto reports = json::parse(read_file(dir / "reports.json"));
  CHECK(reports.size() == 3);
  CHECK_FALSE(reports[0].contains("wall_time_s"));
  CHECK(json::parse(read_file(dir / "reports.json.resources.json")).size() == 3);
  // mock-no never answers yes: the all-zero row
  CHECK(reports[2].at("aggregates").at("F1") == 0.0);
  CHECK(reports[2].at("aggregates").at("Precision") == 0.0);

  const auto csv = invoke({"board", dir / "reports.json", "--format", "csv"});
  REQUIRE(csv.code == 0);
  CHECK(count_lines(csv.out) == 1 + 3);
  const auto md = invoke({"board", dir / "reports.json"});
  CHECK(md.out.rfind("# ParallelismDetection leaderboard (ranked by F1)", 0) == 0);
  const auto js = invoke({"board", dir / "reports.json", "--format", "json", "--metric", "Recall"});
  CHECK(json::parse(js.out).at("primary_metric") == "Recall");
  CHECK(invoke({"board", dir / "reports.json", "--metric", "BLEU"}).code == 2);
  CHECK(invoke({"board", dir / "reports.json", "--format", "xml"}).code == 2);
}

TEST_CASE("config file supplies flag values") {
  TempDir dir("hpcplp_cli_config");
  const auto input = (kData / "ompqa_fixture.jsonl").string();
  std::ofstream(dir / "cfg.toml") << "seed = 7\n";
  const auto from_file = invoke({"--config-file", dir / "cfg.toml", "data", "shuffle", input, "--schema", "qa"});
  const auto from_flag = invoke({"--seed", "7", "data", "shuffle", input, "--schema", "qa"});
  const auto default_seed = invoke({"data", "shuffle", input, "--schema", "qa"});
  REQUIRE(from_file.code == 0);
  CHECK(from_file.out == from_flag.out);
  CHECK(from_file.out != default_seed.out);
  CHECK(invoke({"--config-file", dir / "absent.toml", "data", "stats", input, "--schema", "qa"}).code == 2);
}

TEST_CASE("exit code contract") {
  using hpcplp::cli::exit_code_for;
  CHECK(exit_code_for(ErrorCode::InvalidChunkParams) == 2);
  CHECK(exit_code_for(ErrorCode::EmptyInput) == 2);
  CHECK(exit_code_for(ErrorCode::UnsupportedLanguage) == 3);
  CHECK(exit_code_for(ErrorCode::InsufficientData) == 3);
  CHECK(exit_code_for(ErrorCode::IoError) == 4);
  CHECK(exit_code_for(ErrorCode::HttpError) == 4);
  CHECK(exit_code_for(ErrorCode::Timeout) == 4);
}
