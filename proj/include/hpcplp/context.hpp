#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hpcplp/model.hpp"
#include "hpcplp/tokenizer.hpp"

namespace hpcplp {

inline constexpr std::size_t kDefaultChunkSize = 512;
inline constexpr std::size_t kDefaultChunkOverlap = 64;
inline constexpr std::size_t kDefaultTopK = 4;
/// 4096-token context minus the 256-token answer allowance.
inline constexpr std::size_t kDefaultTokenBudget = 4096 - 256;

/// Approximate token count: whitespace tokens * 1.3, rounded up.
std::size_t estimate_tokens(std::string_view text);

struct Chunk {
  std::int64_t id = 0;
  std::string text;
  std::string source;
  ByteSpan char_span;  // byte range of `text` inside the source document
  std::size_t token_count = 0;  // estimate_tokens(text)

  friend bool operator==(const Chunk&, const Chunk&) = default;
};

/// Windows of `chunk_size` whitespace tokens starting every
/// chunk_size - overlap tokens, one window per start below the token count.
/// Chunk text is the source slice from the first token to the last, so inner
/// whitespace is kept. Ids count up from `first_id`. A document without
/// tokens yields no chunks. Throws Error(InvalidChunkParams).
std::vector<Chunk> chunk_document(std::string_view text, std::size_t chunk_size,
                                  std::size_t overlap, std::string_view source = {},
                                  std::int64_t first_id = 0);

/// Exact cosine similarity in double precision, clamped to [-1, 1]. Zero
/// vectors score 0.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

class VectorStore {
 public:
  explicit VectorStore(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return chunks_.size(); }
  bool empty() const noexcept { return chunks_.empty(); }
  const std::vector<Chunk>& chunks() const noexcept { return chunks_; }
  const std::vector<std::vector<float>>& vectors() const noexcept { return vectors_; }
  bool contains(std::int64_t chunk_id) const;

  /// Throws Error(DimensionMismatch) or Error(DuplicateChunk).
  void add(Chunk chunk, std::vector<float> vector);

  /// Header line {"dim","count"} then one JSON line per entry.
  void save(const std::filesystem::path& path) const;
  static VectorStore load(const std::filesystem::path& path);

 private:
  std::size_t dim_;
  std::vector<Chunk> chunks_;
  std::vector<std::vector<float>> vectors_;
  std::unordered_set<std::int64_t> ids_;
};

/// Embeds every chunk and appends it, in order. Nothing is added when any
/// check fails. Throws Error(DimensionMismatch) or Error(DuplicateChunk).
void index(VectorStore& store, std::span<const Chunk> chunks, const ModelHandle& embedder,
           const BackendOptions& options = {});

struct RetrievalResult {
  Chunk chunk;
  double score = 0.0;
};

/// Brute-force top-k by cosine similarity; ties keep insertion order.
/// Throws Error(EmptyStore) or Error(InvalidArgument) for k == 0.
std::vector<RetrievalResult> retrieve_by_vector(const VectorStore& store,
                                                std::span<const float> query, std::size_t k);
std::vector<RetrievalResult> retrieve(const VectorStore& store, std::string_view query,
                                      const ModelHandle& embedder, std::size_t k,
                                      const BackendOptions& options = {});

struct AugmentResult {
  std::vector<RetrievalResult> context;  // chunks injected, in score order
  std::string prompt;
  /// Set when the question alone is over budget. The prompt is then the bare
  /// question prompt, which is the one case where it exceeds the budget.
  bool over_budget = false;
};

/// Adds retrieved chunks in score order while estimate_tokens(prompt) stays
/// within the budget, stopping at the first chunk that does not fit.
AugmentResult augment(std::string_view question, const VectorStore& store,
                      const ModelHandle& embedder, std::size_t k, std::size_t token_budget,
                      const BackendOptions& options = {});

/// augment() over an already ranked list; retrieval-free so it can be tested
/// against hand-built token counts.
AugmentResult assemble_context(std::string_view question, std::vector<RetrievalResult> ranked,
                               std::size_t token_budget);

}  // namespace hpcplp
