#include "hpcplp/harness.hpp"

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "hpcplp/errors.hpp"

namespace hpcplp {

namespace {

std::string binary_label_field(Task task) {
  return task == Task::CodeSimilarity ? "label" : "parallelizable";
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string percent(double v) { return fmt::format("{:.1f}", v * 100.0); }

std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

EvalReport score_results(Task task, const Dataset& ds, std::span<const BatchItem> results,
                         const std::string& model, const EvalConfig& cfg) {
  if (results.empty()) throw Error(ErrorCode::EmptyInput, "no predictions to score");
  if (ds.empty()) throw Error(ErrorCode::EmptyInput, "dataset is empty");
  if (ds.schema != schema_for(task)) {
    throw Error(ErrorCode::SchemaMismatch,
                fmt::format("{} needs a {} dataset, got {}", to_string(task),
                            to_string(schema_for(task)), to_string(ds.schema)));
  }
  std::unordered_map<std::string, const BatchItem*> by_id;
  for (const auto& item : results) by_id.emplace(item.id, &item);

  EvalReport report;
  report.task = task;
  report.model = model;
  report.dataset = ds.provenance;
  report.sampling = cfg.sampling;
  if (!report.sampling.seed) report.sampling.seed = cfg.seed;
  report.seed = *report.sampling.seed;

  const auto find = [&](const Record& r) -> const BatchItem* {
    const auto it = by_id.find(r.id());
    return it == by_id.end() ? nullptr : it->second;
  };

  if (task != Task::OpenMPQA) {
    std::vector<int> preds, labels;
    const auto field = binary_label_field(task);
    for (const auto& r : ds.records) {
      const auto* item = find(r);
      nlohmann::json ex{{"id", r.id()}, {"label", r.integer(field)}};
      int pred = 0;
      if (item && item->ok()) {
        const auto& v = std::get<Verdict>(*item->result);
        pred = v.label;
        ex["parse_status"] = std::string(to_string(v.parse_status));
      } else {
        ++report.errors;
        ex["error"] = item ? item->error : std::string("no prediction for this id");
      }
      ex["prediction"] = pred;
      preds.push_back(pred);
      labels.push_back(static_cast<int>(r.integer(field)));
      report.per_example.push_back(std::move(ex));
    }
    const auto m = classification_metrics(preds, labels);
    report.counts = m.counts;
    report.aggregates = {{"Precision", m.precision}, {"Recall", m.recall}, {"F1", m.f1}};
    return report;
  }

  std::vector<double> b, rr, rp, rf, cb;
  for (const auto& r : ds.records) {
    const auto* item = find(r);
    const auto& reference = r.text("reference_answer");
    const auto category = r.text("category");
    nlohmann::json ex{{"id", r.id()}, {"category", category}};
    std::string answer;
    if (item && item->ok()) {
      const auto& a = std::get<Answer>(*item->result);
      answer = a.text;
      ex["context_chunks_used"] = a.context_chunks_used;
    } else {
      ++report.errors;
      ex["error"] = item ? item->error : std::string("no prediction for this id");
    }
    const std::vector<std::string> refs{reference};
    const double bl = bleu(answer, refs, cfg.bleu);
    const auto rl = rouge_l(answer, reference);
    ex["bleu"] = bl;
    ex["rouge_l_r"] = rl.recall;
    ex["rouge_l_p"] = rl.precision;
    ex["rouge_l_f1"] = rl.f1;
    b.push_back(bl);
    rr.push_back(rl.recall);
    rp.push_back(rl.precision);
    rf.push_back(rl.f1);
    if (category == "Examples") {
      const auto score = codebleu(CodeSnippet(answer, Language::C), CodeSnippet(reference, Language::C),
                                  cfg.codebleu);
      ex["codebleu"] = score.score;
      cb.push_back(score.score);
    }
    report.per_example.push_back(std::move(ex));
  }
  report.aggregates = {{"BLEU", mean(b)}, {"ROUGE_L_R", mean(rr)}, {"ROUGE_L_P", mean(rp)},
                       {"ROUGE_L_F1", mean(rf)}};
  if (!cb.empty()) report.aggregates["CodeBLEU"] = mean(cb);
  return report;
}

std::vector<EvalReport> compute(Task task, std::span<const ModelHandle> models, const Dataset& ds,
                                const EvalConfig& cfg) {
  if (ds.schema != schema_for(task)) {
    throw Error(ErrorCode::SchemaMismatch,
                fmt::format("{} needs a {} dataset, got {}", to_string(task),
                            to_string(schema_for(task)), to_string(ds.schema)));
  }
  std::vector<EvalReport> out;
  for (const auto& model : models) {
    ResourceMonitor monitor;
    EvalReport report;
    PipelineSpec spec;
    spec.task = task;
    spec.model = model;
    spec.config = cfg.sampling;
    if (!spec.config.seed) spec.config.seed = cfg.seed;
    spec.augmenter = cfg.augmenter;
    spec.direct = cfg.direct;
    spec.backend = cfg.backend;
    try {
      const auto results = run_batch(spec, ds, cfg.parallelism);
      report = score_results(task, ds, results, model.name, cfg);
    } catch (const Error& e) {
      spdlog::error("{}: {}", model.name, e.what());
      report.task = task;
      report.model = model.name;
      report.dataset = ds.provenance;
      report.sampling = spec.config;
      report.seed = *spec.config.seed;
      report.error = e.what();
    }
    monitor.stop();
    report.wall_time_s = monitor.wall_time_s();
    report.peak_memory_bytes = monitor.peak_rss_bytes();
    out.push_back(std::move(report));
  }
  return out;
}

std::vector<EvalReport> compute(Task task, std::span<const ModelHandle> models,
                                std::span<const std::filesystem::path> data_files,
                                const EvalConfig& cfg) {
  if (data_files.empty()) throw Error(ErrorCode::EmptyInput, "no data files given");
  Dataset all{schema_for(task), {}, {}};
  for (const auto& path : data_files) {
    auto ds = load(path, schema_for(task));
    if (!all.provenance.empty()) all.provenance += ',';
    all.provenance += ds.provenance;
    all.records.insert(all.records.end(), ds.records.begin(), ds.records.end());
  }
  return compute(task, models, all, cfg);
}

nlohmann::json to_json(const EvalReport& report, bool include_resources) {
  nlohmann::json j;
  j["schema_version"] = report.schema_version;
  j["task"] = std::string(to_string(report.task));
  j["model"] = report.model;
  j["dataset"] = report.dataset;
  j["seed"] = report.seed;
  j["sampling"] = to_json(report.sampling);
  j["aggregates"] = report.aggregates;
  if (report.counts) {
    j["counts"] = {{"tp", report.counts->tp}, {"fp", report.counts->fp},
                   {"fn", report.counts->fn}, {"tn", report.counts->tn}};
  }
  j["errors"] = report.errors;
  if (!report.error.empty()) j["error"] = report.error;
  j["per_example"] = report.per_example;
  if (include_resources) {
    j["wall_time_s"] = report.wall_time_s;
    j["peak_memory_bytes"] = report.peak_memory_bytes;
  }
  return j;
}

nlohmann::json resources_json(const EvalReport& report) {
  return {{"model", report.model},
          {"wall_time_s", report.wall_time_s},
          {"peak_memory_bytes", report.peak_memory_bytes}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kReportSchemaVersion) {
      throw Error(ErrorCode::SchemaError,
                  fmt::format("report schema_version {} is not {}", r.schema_version,
                              kReportSchemaVersion));
    }
    r.task = parse_task(j.at("task").get<std::string>());
    r.model = j.at("model").get<std::string>();
    r.dataset = j.value("dataset", std::string());
    r.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("sampling")) {
      const auto& s = j["sampling"];
      r.sampling.temperature = s.value("temperature", 0.0);
      r.sampling.max_output_tokens = s.value("max_output_tokens", kDefaultMaxOutputTokens);
      if (s.contains("seed") && !s["seed"].is_null()) r.sampling.seed = s["seed"].get<std::uint64_t>();
      r.sampling.min_positive_temperature = s.value("min_positive_temperature", kMinPositiveTemperature);
    }
    r.aggregates = j.at("aggregates").get<std::map<std::string, double>>();
    if (j.contains("counts")) {
      const auto& c = j["counts"];
      r.counts = ClassificationCounts{c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(),
                                      c.at("fn").get<std::size_t>(), c.at("tn").get<std::size_t>()};
    }
    r.errors = j.value("errors", std::size_t{0});
    r.error = j.value("error", std::string());
    if (j.contains("per_example")) r.per_example = j["per_example"].get<std::vector<nlohmann::json>>();
    r.wall_time_s = j.value("wall_time_s", 0.0);
    r.peak_memory_bytes = j.value("peak_memory_bytes", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, fmt::format("malformed report: {}", e.what()));
  }
  return r;
}

std::uint64_t current_rss_bytes() {
  std::ifstream in("/proc/self/statm");
  std::uint64_t size = 0, resident = 0;
  if (!(in >> size >> resident)) return 0;
  return resident * static_cast<std::uint64_t>(::sysconf(_SC_PAGESIZE));
}

ResourceMonitor::ResourceMonitor(std::chrono::milliseconds interval)
    : interval_(interval), started_(std::chrono::steady_clock::now()) {
  sample();
  worker_ = std::thread([this] {
    std::unique_lock lock(mu_);
    while (!cv_.wait_for(lock, interval_, [this] { return stopping_; })) sample();
  });
}

ResourceMonitor::~ResourceMonitor() { stop(); }

void ResourceMonitor::sample() {
  const auto rss = current_rss_bytes();
  auto prev = peak_.load();
  while (rss > prev && !peak_.compare_exchange_weak(prev, rss)) {
  }
}

void ResourceMonitor::stop() {
  {
    std::lock_guard lock(mu_);
    if (stopping_) return;
    stopping_ = true;
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
  sample();
  wall_s_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
}

Leaderboard leaderboard(std::span<const EvalReport> reports, const std::string& primary_metric) {
  Leaderboard board;
  board.primary_metric = primary_metric;
  std::vector<const EvalReport*> usable;
  for (const auto& r : reports) {
    if (!r.error.empty()) {
      spdlog::warn("leaving {} off the leaderboard: {}", r.model, r.error);
      continue;
    }
    usable.push_back(&r);
  }
  if (usable.empty()) throw Error(ErrorCode::EmptyInput, "no reports to rank");
  board.task = std::string(to_string(usable.front()->task));
  for (const auto* r : usable) {
    if (r->task != usable.front()->task) {
      throw Error(ErrorCode::InvalidArgument, "reports cover different tasks");
    }
    if (!r->aggregates.contains(primary_metric)) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("report for {} has no metric '{}'", r->model, primary_metric));
    }
  }
  for (auto name : kMetricNames) {
    const std::string n(name);
    if (std::all_of(usable.begin(), usable.end(),
                    [&](const EvalReport* r) { return r->aggregates.contains(n); })) {
      board.columns.push_back(n);
    }
  }
  for (const auto* r : usable) board.rows.push_back({r->model, r->aggregates});
  std::sort(board.rows.begin(), board.rows.end(), [&](const LeaderboardRow& a, const LeaderboardRow& b) {
    const double x = a.metrics.at(primary_metric), y = b.metrics.at(primary_metric);
    if (x != y) return x > y;
    return a.model < b.model;
  });
  return board;
}

std::string render_markdown(const Leaderboard& board) {
  std::string out = fmt::format("# {} leaderboard (ranked by {})\n\n", board.task, board.primary_metric);
  out += "| Rank | Model |";
  for (const auto& c : board.columns) out += fmt::format(" {} |", c);
  out += "\n| ---: | :--- |";
  for (std::size_t i = 0; i < board.columns.size(); ++i) out += " ---: |";
  out += '\n';
  for (std::size_t i = 0; i < board.rows.size(); ++i) {
    const auto& row = board.rows[i];
    out += fmt::format("| {} | {} |", i + 1, md_escape(row.model));
    for (const auto& c : board.columns) out += fmt::format(" {} |", percent(row.metrics.at(c)));
    out += '\n';
  }
  return out;
}

std::string render_csv(const Leaderboard& board) {
  std::string out = "rank,model";
  for (const auto& c : board.columns) out += ',' + c;
  out += '\n';
  for (std::size_t i = 0; i < board.rows.size(); ++i) {
    const auto& row = board.rows[i];
    out += fmt::format("{},{}", i + 1, csv_field(row.model));
    for (const auto& c : board.columns) out += ',' + percent(row.metrics.at(c));
    out += '\n';
  }
  return out;
}

nlohmann::json to_json(const Leaderboard& board) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < board.rows.size(); ++i) {
    nlohmann::json metrics;
    for (const auto& c : board.columns) metrics[c] = board.rows[i].metrics.at(c);
    rows.push_back({{"rank", i + 1}, {"model", board.rows[i].model}, {"metrics", metrics}});
  }
  return {{"task", board.task},
          {"primary_metric", board.primary_metric},
          {"columns", board.columns},
          {"rows", rows}};
}

}  // namespace hpcplp
