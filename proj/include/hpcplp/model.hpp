#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace hpcplp {

inline constexpr int kDefaultMaxOutputTokens = 256;
inline constexpr double kMinPositiveTemperature = 1e-6;
inline constexpr std::size_t kMockEmbeddingDim = 64;

struct SamplingConfig {
  double temperature = 0.0;
  int max_output_tokens = kDefaultMaxOutputTokens;
  std::optional<std::uint64_t> seed;
  double min_positive_temperature = kMinPositiveTemperature;

  /// Throws Error(InvalidConfig).
  void validate() const;

  friend bool operator==(const SamplingConfig&, const SamplingConfig&) = default;
};

nlohmann::json to_json(const SamplingConfig& cfg);

enum class ModelKind { RemoteChat, Mock };
enum class MockKind { Echo, Const, Classifier };

std::string_view to_string(ModelKind kind);

/// Immutable description of a model. Cheap to copy and safe to share across
/// threads; a classifier table is loaded once and shared.
struct ModelHandle {
  std::string name;
  ModelKind kind = ModelKind::Mock;
  std::optional<std::string> endpoint;  // RemoteChat only
  bool requires_positive_temperature = false;
  std::string api_key_env;
  std::size_t embedding_dim = kMockEmbeddingDim;
  bool supports_seed = false;

  // Mock only. `mock_uri` is the full "mock:..." string.
  std::string mock_uri;
  MockKind mock_kind = MockKind::Echo;
  std::string mock_text;  // Const payload
  std::shared_ptr<const std::map<std::string, std::string>> classifier_table;

  /// Compares configuration, not the loaded table.
  friend bool operator==(const ModelHandle& a, const ModelHandle& b) {
    return a.name == b.name && a.kind == b.kind && a.endpoint == b.endpoint &&
           a.requires_positive_temperature == b.requires_positive_temperature &&
           a.api_key_env == b.api_key_env && a.embedding_dim == b.embedding_dim &&
           a.supports_seed == b.supports_seed && a.mock_uri == b.mock_uri;
  }
};

/// Resolution order: "mock:" URI, http(s) URL, an existing file holding a
/// saved handle, then a name in the registry. The registry is `registry` when
/// given, else $HPCPLP_MODEL_REGISTRY, else ./models.json.
/// Throws Error(UnknownModel) or Error(InvalidConfig).
ModelHandle from_pretrained(std::string_view name_or_path,
                            const std::optional<std::filesystem::path>& registry = std::nullopt);

/// Writes a one-entry registry file. Throws Error(IoError).
void save_pretrained(const ModelHandle& handle, const std::filesystem::path& path);

/// Registry entry form of a handle.
nlohmann::json to_registry_entry(const ModelHandle& handle);

struct ModelRequest {
  std::string prompt;
  SamplingConfig config;
};

struct ModelResponse {
  std::string text;
  int prompt_tokens = 0;
  int output_tokens = 0;
  double latency_ms = 0.0;
};

/// Temperature actually sent: the configured one, lifted to the minimum
/// positive value when the model rejects zero.
double effective_temperature(const ModelHandle& handle, const SamplingConfig& cfg);

/// The chat-completion JSON body for a request. Mocks build it too so the
/// sampling controls can be inspected regardless of backend.
nlohmann::json chat_payload(const ModelHandle& handle, const ModelRequest& request);

struct HttpRequest {
  std::string url;  // full URL including path
  std::map<std::string, std::string> headers;
  std::string body;
  std::chrono::milliseconds timeout{60000};
};

struct HttpResult {
  enum class Failure { None, Timeout, Connection };
  int status = 0;
  std::string body;
  Failure failure = Failure::None;
};

/// POST transport. Implementations must be callable from several threads.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResult post(const HttpRequest& request) = 0;
};

/// cpp-httplib backed transport (http and https).
std::shared_ptr<HttpTransport> make_http_transport();

struct BackendOptions {
  std::shared_ptr<HttpTransport> transport;  // null means make_http_transport()
  std::chrono::milliseconds retry_backoff{2000};
  std::chrono::milliseconds timeout{60000};
  /// Sees every chat payload before it is sent (or answered by a mock).
  std::function<void(const nlohmann::json&)> on_payload;
};

/// Mocks answer from (prompt, seed, config) alone and require a seed.
/// Remote calls retry once on 429 or 5xx. Throws HttpError, Error(Timeout),
/// Error(MalformedResponse), Error(LookupMiss), Error(InvalidConfig).
ModelResponse complete(const ModelHandle& handle, const ModelRequest& request,
                       const BackendOptions& options = {});

/// Mock: FNV-1a per whitespace token seeds a SplitMix64 stream of D values in
/// [-1, 1]; the sum over tokens is L2-normalized. Empty text embeds as the
/// empty token. Remote: POST {endpoint}/v1/embeddings.
std::vector<float> embed(const ModelHandle& handle, std::string_view text,
                         const BackendOptions& options = {});

/// Always throws Error(Unsupported, "finetuning out of scope").
[[noreturn]] void finetune(const ModelHandle& handle, const std::filesystem::path& data_file);

/// Splits on ASCII whitespace.
std::vector<std::string_view> whitespace_tokens(std::string_view text);

}  // namespace hpcplp
