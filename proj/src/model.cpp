#include "hpcplp/model.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "hpcplp/errors.hpp"
#include "hpcplp/rng.hpp"

namespace hpcplp {

namespace {

constexpr std::string_view kMockPrefix = "mock:";

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Prefix of `text` ending after its n-th whitespace token; the original bytes
// are kept.
std::string truncate_tokens(std::string_view text, int n) {
  int seen = 0;
  std::size_t i = 0;
  std::size_t last_end = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i == text.size()) break;
    if (seen == n) return std::string(text.substr(0, last_end));
    while (i < text.size() && !is_space(text[i])) ++i;
    last_end = i;
    ++seen;
  }
  return std::string(text);
}

ModelHandle mock_handle(std::string name, std::string_view uri,
                        const std::filesystem::path& base_dir) {
  ModelHandle h;
  h.name = std::move(name);
  h.kind = ModelKind::Mock;
  const auto rest = uri.substr(kMockPrefix.size());
  if (rest == "echo") {
    h.mock_kind = MockKind::Echo;
    h.mock_uri = std::string(uri);
  } else if (rest.starts_with("const:")) {
    h.mock_kind = MockKind::Const;
    h.mock_text = std::string(rest.substr(6));
    h.mock_uri = std::string(uri);
  } else if (rest.starts_with("classifier:")) {
    h.mock_kind = MockKind::Classifier;
    std::filesystem::path table_path(std::string(rest.substr(11)));
    if (table_path.is_relative() && !base_dir.empty()) table_path = base_dir / table_path;
    table_path = table_path.lexically_normal();
    std::ifstream in(table_path);
    if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read {}", table_path.string()));
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidConfig,
                  fmt::format("{}: not a JSON object: {}", table_path.string(), e.what()));
    }
    if (!j.is_object()) {
      throw Error(ErrorCode::InvalidConfig,
                  fmt::format("{}: classifier table must map input to answer", table_path.string()));
    }
    auto table = std::make_shared<std::map<std::string, std::string>>();
    for (const auto& [k, v] : j.items()) {
      if (!v.is_string()) {
        throw Error(ErrorCode::InvalidConfig,
                    fmt::format("{}: answer for an entry is not a string", table_path.string()));
      }
      table->emplace(k, v.get<std::string>());
    }
    h.classifier_table = std::move(table);
    h.mock_uri = fmt::format("mock:classifier:{}", table_path.string());
  } else {
    throw Error(ErrorCode::UnknownModel, fmt::format("unknown mock model '{}'", uri));
  }
  return h;
}

ModelHandle handle_from_entry(const nlohmann::json& e, const std::filesystem::path& base_dir) {
  if (!e.is_object() || !e.contains("name") || !e["name"].is_string()) {
    throw Error(ErrorCode::InvalidConfig, "registry entry needs a string 'name'");
  }
  const auto name = e["name"].get<std::string>();
  const auto endpoint = e.value("endpoint", std::string());
  ModelHandle h;
  if (endpoint.starts_with(kMockPrefix)) {
    h = mock_handle(name, endpoint, base_dir);
  } else {
    if (endpoint.empty()) {
      throw Error(ErrorCode::InvalidConfig,
                  fmt::format("registry entry '{}' has no endpoint", name));
    }
    h.name = name;
    h.kind = ModelKind::RemoteChat;
    h.endpoint = endpoint;
  }
  h.api_key_env = e.value("api_key_env", std::string());
  h.requires_positive_temperature = e.value("requires_positive_temperature", false);
  h.embedding_dim = e.value("embedding_dim", kMockEmbeddingDim);
  h.supports_seed = e.value("supports_seed", false);
  if (h.embedding_dim == 0) {
    throw Error(ErrorCode::InvalidConfig, fmt::format("'{}': embedding_dim must be positive", name));
  }
  return h;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read {}", path.string()));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::filesystem::path registry_path(const std::optional<std::filesystem::path>& given) {
  if (given) return *given;
  if (const char* env = std::getenv("HPCPLP_MODEL_REGISTRY"); env && *env) return env;
  return "models.json";
}

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, fmt::format("malformed URL '{}'", url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string join_endpoint(const std::string& endpoint, std::string_view suffix) {
  std::string base = endpoint;
  while (!base.empty() && base.back() == '/') base.pop_back();
  return base + std::string(suffix);
}

class HttplibTransport final : public HttpTransport {
 public:
  HttpResult post(const HttpRequest& request) override {
    const auto [origin, path] = split_url(request.url);
    httplib::Client client(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) {
      if (k != "Content-Type") headers.emplace(k, v);
    }
    auto res = client.Post(path, headers, request.body, "application/json");
    HttpResult out;
    if (!res) {
      const auto err = res.error();
      out.failure = (err == httplib::Error::Read || err == httplib::Error::Write ||
                     err == httplib::Error::ConnectionTimeout)
                        ? HttpResult::Failure::Timeout
                        : HttpResult::Failure::Connection;
      out.body = httplib::to_string(err);
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  }
};

bool retryable(int status) { return status == 429 || (status >= 500 && status < 600); }

HttpResult post_with_retry(const ModelHandle& handle, std::string_view suffix,
                           const nlohmann::json& body, const BackendOptions& options) {
  auto transport = options.transport ? options.transport : make_http_transport();
  HttpRequest req;
  req.url = join_endpoint(*handle.endpoint, suffix);
  req.body = body.dump();
  req.timeout = options.timeout;
  req.headers["Content-Type"] = "application/json";
  if (!handle.api_key_env.empty()) {
    if (const char* key = std::getenv(handle.api_key_env.c_str()); key && *key) {
      req.headers["Authorization"] = fmt::format("Bearer {}", key);
    } else {
      spdlog::warn("{}: environment variable {} is not set", handle.name, handle.api_key_env);
    }
  }

  HttpResult res;
  for (int attempt = 0; attempt < 2; ++attempt) {
    res = transport->post(req);
    if (res.failure == HttpResult::Failure::Timeout) {
      throw Error(ErrorCode::Timeout, fmt::format("{}: request to {} timed out", handle.name, req.url));
    }
    if (res.failure == HttpResult::Failure::Connection) {
      throw HttpError(0, fmt::format("{}: cannot reach {}: {}", handle.name, req.url, res.body));
    }
    if (!retryable(res.status) || attempt == 1) break;
    spdlog::warn("{}: HTTP {}, retrying in {} ms", handle.name, res.status,
                 options.retry_backoff.count());
    std::this_thread::sleep_for(options.retry_backoff);
  }
  if (res.status < 200 || res.status >= 300) {
    throw HttpError(res.status, fmt::format("{}: HTTP {} from {}", handle.name, res.status, req.url));
  }
  return res;
}

nlohmann::json parse_body(const ModelHandle& handle, const std::string& body) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::MalformedResponse, fmt::format("{}: response is not JSON", handle.name));
  }
}

int count_tokens(std::string_view text) { return static_cast<int>(whitespace_tokens(text).size()); }

ModelResponse complete_mock(const ModelHandle& handle, const ModelRequest& request) {
  if (!request.config.seed) {
    throw Error(ErrorCode::InvalidConfig,
                fmt::format("{}: mock models require a seed", handle.name));
  }
  ModelResponse res;
  switch (handle.mock_kind) {
    case MockKind::Echo:
      res.text = truncate_tokens(request.prompt, request.config.max_output_tokens);
      break;
    case MockKind::Const:
      res.text = truncate_tokens(handle.mock_text, request.config.max_output_tokens);
      break;
    case MockKind::Classifier: {
      const auto it = handle.classifier_table->find(request.prompt);
      if (it == handle.classifier_table->end()) {
        throw Error(ErrorCode::LookupMiss,
                    fmt::format("{}: no table entry for the given input", handle.name));
      }
      res.text = truncate_tokens(it->second, request.config.max_output_tokens);
      break;
    }
  }
  res.prompt_tokens = count_tokens(request.prompt);
  res.output_tokens = count_tokens(res.text);
  return res;
}

ModelResponse complete_remote(const ModelHandle& handle, const nlohmann::json& payload,
                              const ModelRequest& request, const BackendOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const auto http = post_with_retry(handle, "/v1/chat/completions", payload, options);
  const auto elapsed = std::chrono::steady_clock::now() - started;
  const auto j = parse_body(handle, http.body);

  const auto malformed = [&](std::string_view what) {
    return Error(ErrorCode::MalformedResponse, fmt::format("{}: {}", handle.name, what));
  };
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw malformed("response has no choices");
  }
  const auto& msg = j["choices"][0].value("message", nlohmann::json::object());
  if (!msg.contains("content") || !msg["content"].is_string()) {
    throw malformed("choice has no message content");
  }
  ModelResponse res;
  res.text = msg["content"].get<std::string>();
  const auto usage = j.value("usage", nlohmann::json::object());
  res.prompt_tokens = usage.value("prompt_tokens", count_tokens(request.prompt));
  res.output_tokens = usage.value("completion_tokens", count_tokens(res.text));
  if (res.output_tokens > request.config.max_output_tokens) {
    throw malformed(fmt::format("{} output tokens exceed max_tokens {}", res.output_tokens,
                                request.config.max_output_tokens));
  }
  res.latency_ms = std::chrono::duration<double, std::milli>(elapsed).count();
  return res;
}

}  // namespace

void SamplingConfig::validate() const {
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::InvalidConfig, fmt::format("temperature must be >= 0, got {}", temperature));
  }
  if (max_output_tokens < 1) {
    throw Error(ErrorCode::InvalidConfig,
                fmt::format("max_output_tokens must be >= 1, got {}", max_output_tokens));
  }
  if (!(min_positive_temperature > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "min_positive_temperature must be positive");
  }
}

nlohmann::json to_json(const SamplingConfig& cfg) {
  nlohmann::json j;
  j["temperature"] = cfg.temperature;
  j["max_output_tokens"] = cfg.max_output_tokens;
  j["seed"] = cfg.seed ? nlohmann::json(*cfg.seed) : nlohmann::json(nullptr);
  j["min_positive_temperature"] = cfg.min_positive_temperature;
  return j;
}

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::RemoteChat ? "RemoteChat" : "Mock";
}

std::vector<std::string_view> whitespace_tokens(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const auto start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

ModelHandle from_pretrained(std::string_view name_or_path,
                            const std::optional<std::filesystem::path>& registry) {
  const std::string name(name_or_path);
  if (name.starts_with(kMockPrefix)) return mock_handle(name, name, {});
  if (name.starts_with("http://") || name.starts_with("https://")) {
    ModelHandle h;
    h.name = name;
    h.kind = ModelKind::RemoteChat;
    h.endpoint = name;
    return h;
  }

  std::error_code ec;
  if (std::filesystem::is_regular_file(name, ec)) {
    const std::filesystem::path path(name);
    const auto j = read_json_file(path);
    const auto& entries = j.is_array() ? j : nlohmann::json::array({j});
    if (entries.size() != 1) {
      throw Error(ErrorCode::InvalidConfig,
                  fmt::format("{} holds {} models; name one of them instead", name, entries.size()));
    }
    return handle_from_entry(entries[0], path.parent_path());
  }

  const auto reg = registry_path(registry);
  if (std::filesystem::is_regular_file(reg, ec)) {
    const auto j = read_json_file(reg);
    if (!j.is_array()) {
      throw Error(ErrorCode::InvalidConfig, fmt::format("{}: registry must be a JSON array", reg.string()));
    }
    for (const auto& e : j) {
      if (e.is_object() && e.value("name", std::string()) == name) {
        return handle_from_entry(e, reg.parent_path());
      }
    }
  }
  throw Error(ErrorCode::UnknownModel, fmt::format("unknown model '{}'", name));
}

nlohmann::json to_registry_entry(const ModelHandle& handle) {
  nlohmann::json e;
  e["name"] = handle.name;
  e["endpoint"] = handle.kind == ModelKind::Mock ? handle.mock_uri : handle.endpoint.value_or("");
  e["api_key_env"] = handle.api_key_env;
  e["requires_positive_temperature"] = handle.requires_positive_temperature;
  e["embedding_dim"] = handle.embedding_dim;
  e["supports_seed"] = handle.supports_seed;
  return e;
}

void save_pretrained(const ModelHandle& handle, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", path.string()));
  out << nlohmann::json::array({to_registry_entry(handle)}).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, fmt::format("write failed for {}", path.string()));
}

double effective_temperature(const ModelHandle& handle, const SamplingConfig& cfg) {
  if (handle.requires_positive_temperature) {
    return std::max(cfg.temperature, cfg.min_positive_temperature);
  }
  return cfg.temperature;
}

nlohmann::json chat_payload(const ModelHandle& handle, const ModelRequest& request) {
  nlohmann::json body;
  body["model"] = handle.name;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = effective_temperature(handle, request.config);
  body["max_tokens"] = request.config.max_output_tokens;
  if (handle.supports_seed && request.config.seed) body["seed"] = *request.config.seed;
  return body;
}

std::shared_ptr<HttpTransport> make_http_transport() { return std::make_shared<HttplibTransport>(); }

ModelResponse complete(const ModelHandle& handle, const ModelRequest& request,
                       const BackendOptions& options) {
  request.config.validate();
  const auto payload = chat_payload(handle, request);
  if (options.on_payload) options.on_payload(payload);
  if (handle.kind == ModelKind::Mock) return complete_mock(handle, request);
  if (!handle.endpoint) {
    throw Error(ErrorCode::InvalidConfig, fmt::format("{}: remote model without endpoint", handle.name));
  }
  return complete_remote(handle, payload, request, options);
}

std::vector<float> embed(const ModelHandle& handle, std::string_view text,
                         const BackendOptions& options) {
  const std::size_t dim = handle.embedding_dim;
  if (handle.kind == ModelKind::Mock) {
    std::vector<double> acc(dim, 0.0);
    auto tokens = whitespace_tokens(text);
    if (tokens.empty()) tokens.push_back(std::string_view());
    for (auto tok : tokens) {
      SplitMix64 rng(fnv1a64(tok));
      for (std::size_t d = 0; d < dim; ++d) acc[d] += rng.unit() * 2.0 - 1.0;
    }
    double norm = 0.0;
    for (double v : acc) norm += v * v;
    norm = std::sqrt(norm);
    std::vector<float> out(dim);
    for (std::size_t d = 0; d < dim; ++d) out[d] = static_cast<float>(norm > 0 ? acc[d] / norm : 0.0);
    return out;
  }

  if (!handle.endpoint) {
    throw Error(ErrorCode::InvalidConfig, fmt::format("{}: remote model without endpoint", handle.name));
  }
  nlohmann::json body{{"model", handle.name}, {"input", std::string(text)}};
  const auto http = post_with_retry(handle, "/v1/embeddings", body, options);
  const auto j = parse_body(handle, http.body);
  if (!j.contains("data") || !j["data"].is_array() || j["data"].empty() ||
      !j["data"][0].contains("embedding") || !j["data"][0]["embedding"].is_array()) {
    throw Error(ErrorCode::MalformedResponse, fmt::format("{}: response has no embedding", handle.name));
  }
  const auto& vec = j["data"][0]["embedding"];
  if (vec.size() != dim) {
    throw Error(ErrorCode::MalformedResponse,
                fmt::format("{}: embedding has {} values, expected {}", handle.name, vec.size(), dim));
  }
  std::vector<float> out;
  out.reserve(dim);
  for (const auto& v : vec) {
    if (!v.is_number()) {
      throw Error(ErrorCode::MalformedResponse, fmt::format("{}: non-numeric embedding value", handle.name));
    }
    out.push_back(v.get<float>());
  }
  return out;
}

void finetune(const ModelHandle&, const std::filesystem::path&) {
  throw Error(ErrorCode::Unsupported, "finetuning out of scope");
}

}  // namespace hpcplp
