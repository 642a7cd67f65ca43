#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "hpcplp/metrics.hpp"
#include "hpcplp/pipeline.hpp"

namespace hpcplp {

inline constexpr int kReportSchemaVersion = 1;

/// Canonical metric names, in display order.
inline constexpr std::array<std::string_view, 8> kMetricNames = {
    "Precision", "Recall", "F1", "BLEU", "ROUGE_L_R", "ROUGE_L_P", "ROUGE_L_F1", "CodeBLEU"};

struct EvalReport {
  int schema_version = kReportSchemaVersion;
  Task task = Task::CodeSimilarity;
  std::string model;
  std::string dataset;  // provenance
  std::uint64_t seed = 0;
  SamplingConfig sampling;
  std::vector<nlohmann::json> per_example;
  std::map<std::string, double> aggregates;
  std::optional<ClassificationCounts> counts;  // binary tasks
  std::size_t errors = 0;  // items whose pipeline call failed
  std::string error;  // set when the model could not be run at all

  // Measured, so kept out of the deterministic JSON unless asked for.
  double wall_time_s = 0.0;
  std::uint64_t peak_memory_bytes = 0;
};

nlohmann::json to_json(const EvalReport& report, bool include_resources = false);
/// {"model", "wall_time_s", "peak_memory_bytes"}.
nlohmann::json resources_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

struct EvalConfig {
  SamplingConfig sampling;  // a missing seed is filled from `seed`
  std::uint64_t seed = 42;
  std::size_t parallelism = 1;
  std::optional<Augmenter> augmenter;
  bool direct = false;
  BackendOptions backend;
  BleuConfig bleu;
  CodeBleuConfig codebleu;
};

/// Scores finished pipeline results against the dataset they came from.
/// Failed items count as label 0 (binary tasks) or as empty answers (QA).
/// CodeBLEU is computed for the "Examples" category, reading both sides as C.
/// Throws Error(LengthMismatch) or Error(EmptyInput).
EvalReport score_results(Task task, const Dataset& ds, std::span<const BatchItem> results,
                         const std::string& model, const EvalConfig& cfg);

/// Runs and scores each model in turn. A model that cannot run gets a
/// report with `error` set; the others still run.
std::vector<EvalReport> compute(Task task, std::span<const ModelHandle> models, const Dataset& ds,
                                const EvalConfig& cfg);
/// Loads and concatenates the files first; provenance lists them.
std::vector<EvalReport> compute(Task task, std::span<const ModelHandle> models,
                                std::span<const std::filesystem::path> data_files,
                                const EvalConfig& cfg);

/// Samples the resident set size of this process every `interval` on a
/// background thread, plus once at stop().
class ResourceMonitor {
 public:
  explicit ResourceMonitor(std::chrono::milliseconds interval = std::chrono::milliseconds(100));
  ~ResourceMonitor();
  ResourceMonitor(const ResourceMonitor&) = delete;
  ResourceMonitor& operator=(const ResourceMonitor&) = delete;

  void stop();
  double wall_time_s() const noexcept { return wall_s_; }
  std::uint64_t peak_rss_bytes() const noexcept { return peak_.load(); }

 private:
  void sample();

  std::chrono::milliseconds interval_;
  std::chrono::steady_clock::time_point started_;
  std::atomic<std::uint64_t> peak_{0};
  double wall_s_ = 0.0;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;
  std::thread worker_;
};

/// Current resident set size from /proc/self/statm, 0 when unavailable.
std::uint64_t current_rss_bytes();

struct LeaderboardRow {
  std::string model;
  std::map<std::string, double> metrics;
};

struct Leaderboard {
  std::string task;
  std::string primary_metric;
  std::vector<std::string> columns;  // metric columns in display order
  std::vector<LeaderboardRow> rows;  // best first
};

/// Rows sorted by the primary metric, descending, ties by model name.
/// Reports with an error are left out. Throws Error(InvalidArgument) when a
/// report lacks the primary metric or tasks differ.
Leaderboard leaderboard(std::span<const EvalReport> reports, const std::string& primary_metric);

/// Markdown and CSV show values x100 with one decimal; JSON keeps [0, 1].
std::string render_markdown(const Leaderboard& board);
std::string render_csv(const Leaderboard& board);
nlohmann::json to_json(const Leaderboard& board);

}  // namespace hpcplp
