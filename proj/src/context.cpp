#include "hpcplp/context.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "hpcplp/errors.hpp"
#include "hpcplp/prompts.hpp"

namespace hpcplp {

std::size_t estimate_tokens(std::string_view text) {
  const std::size_t n = whitespace_tokens(text).size();
  return (13 * n + 9) / 10;
}

std::vector<Chunk> chunk_document(std::string_view text, std::size_t chunk_size,
                                  std::size_t overlap, std::string_view source,
                                  std::int64_t first_id) {
  if (chunk_size == 0 || overlap >= chunk_size) {
    throw Error(ErrorCode::InvalidChunkParams,
                fmt::format("need 0 <= overlap < chunk_size, got size {} overlap {}", chunk_size,
                            overlap));
  }
  const auto tokens = whitespace_tokens(text);
  const std::size_t stride = chunk_size - overlap;
  std::vector<Chunk> out;
  for (std::size_t start = 0; start < tokens.size(); start += stride) {
    const std::size_t last = std::min(start + chunk_size, tokens.size()) - 1;
    const auto begin = static_cast<std::size_t>(tokens[start].data() - text.data());
    const auto end = static_cast<std::size_t>(tokens[last].data() - text.data()) + tokens[last].size();
    Chunk c;
    c.id = first_id + static_cast<std::int64_t>(out.size());
    c.text = std::string(text.substr(begin, end - begin));
    c.source = std::string(source);
    c.char_span = {begin, end};
    c.token_count = estimate_tokens(c.text);
    out.push_back(std::move(c));
  }
  return out;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("vectors of length {} and {}", a.size(), b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

VectorStore::VectorStore(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "vector store dimension must be positive");
}

bool VectorStore::contains(std::int64_t chunk_id) const { return ids_.contains(chunk_id); }

void VectorStore::add(Chunk chunk, std::vector<float> vector) {
  if (vector.size() != dim_) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("store has dim {}, vector has {}", dim_, vector.size()));
  }
  if (!ids_.insert(chunk.id).second) {
    throw Error(ErrorCode::DuplicateChunk, fmt::format("chunk id {} already stored", chunk.id));
  }
  chunks_.push_back(std::move(chunk));
  vectors_.push_back(std::move(vector));
}

void VectorStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", path.string()));
  out << nlohmann::json{{"dim", dim_}, {"count", chunks_.size()}}.dump() << '\n';
  for (std::size_t i = 0; i < chunks_.size(); ++i) {
    const auto& c = chunks_[i];
    nlohmann::json line;
    line["chunk_id"] = c.id;
    line["text"] = c.text;
    line["source"] = c.source;
    line["span"] = {c.char_span.start, c.char_span.end};
    line["vector"] = vectors_[i];
    out << line.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, fmt::format("write failed for {}", path.string()));
}

VectorStore VectorStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read {}", path.string()));
  const auto bad = [&](std::size_t line, const std::string& what) {
    return Error(ErrorCode::SchemaError, fmt::format("{}:{}: {}", path.string(), line, what));
  };
  std::string text;
  if (!std::getline(in, text)) throw bad(1, "missing header");
  std::size_t dim = 0, count = 0;
  try {
    const auto header = nlohmann::json::parse(text);
    dim = header.at("dim").get<std::size_t>();
    count = header.at("count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw bad(1, e.what());
  }
  VectorStore store(dim);
  std::size_t line_no = 1;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(text);
      Chunk c;
      c.id = j.at("chunk_id").get<std::int64_t>();
      c.text = j.at("text").get<std::string>();
      c.source = j.at("source").get<std::string>();
      c.char_span = {j.at("span").at(0).get<std::size_t>(), j.at("span").at(1).get<std::size_t>()};
      c.token_count = estimate_tokens(c.text);
      store.add(std::move(c), j.at("vector").get<std::vector<float>>());
    } catch (const nlohmann::json::exception& e) {
      throw bad(line_no, e.what());
    }
  }
  if (store.size() != count) {
    throw bad(1, fmt::format("header says {} entries, file has {}", count, store.size()));
  }
  return store;
}

void index(VectorStore& store, std::span<const Chunk> chunks, const ModelHandle& embedder,
           const BackendOptions& options) {
  if (embedder.embedding_dim != store.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("embedder '{}' has dim {}, store has {}", embedder.name,
                            embedder.embedding_dim, store.dim()));
  }
  std::unordered_set<std::int64_t> ids;
  for (const auto& c : chunks) {
    if (store.contains(c.id) || !ids.insert(c.id).second) {
      throw Error(ErrorCode::DuplicateChunk, fmt::format("chunk id {} already stored", c.id));
    }
  }
  std::vector<std::vector<float>> vectors;
  vectors.reserve(chunks.size());
  for (const auto& c : chunks) vectors.push_back(embed(embedder, c.text, options));
  for (std::size_t i = 0; i < chunks.size(); ++i) store.add(chunks[i], std::move(vectors[i]));
}

std::vector<RetrievalResult> retrieve_by_vector(const VectorStore& store,
                                                std::span<const float> query, std::size_t k) {
  if (store.empty()) throw Error(ErrorCode::EmptyStore, "vector store is empty");
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (query.size() != store.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("query has dim {}, store has {}", query.size(), store.dim()));
  }
  std::vector<double> scores(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    scores[i] = cosine_similarity(query, store.vectors()[i]);
  }
  std::vector<std::size_t> order(store.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(std::min(k, order.size()));
  std::vector<RetrievalResult> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back({store.chunks()[i], scores[i]});
  return out;
}

std::vector<RetrievalResult> retrieve(const VectorStore& store, std::string_view query,
                                      const ModelHandle& embedder, std::size_t k,
                                      const BackendOptions& options) {
  if (store.empty()) throw Error(ErrorCode::EmptyStore, "vector store is empty");
  const auto q = embed(embedder, query, options);
  return retrieve_by_vector(store, q, k);
}

AugmentResult assemble_context(std::string_view question, std::vector<RetrievalResult> ranked,
                               std::size_t token_budget) {
  AugmentResult out;
  out.prompt = build_qa_prompt(question);
  if (estimate_tokens(out.prompt) > token_budget) {
    spdlog::warn("question needs {} tokens, over the budget of {}; no context added",
                 estimate_tokens(out.prompt), token_budget);
    out.over_budget = true;
    return out;
  }
  std::vector<std::string> texts;
  for (auto& r : ranked) {
    texts.push_back(r.chunk.text);
    auto candidate = build_qa_prompt(question, texts);
    if (estimate_tokens(candidate) > token_budget) break;
    out.prompt = std::move(candidate);
    out.context.push_back(std::move(r));
  }
  return out;
}

AugmentResult augment(std::string_view question, const VectorStore& store,
                      const ModelHandle& embedder, std::size_t k, std::size_t token_budget,
                      const BackendOptions& options) {
  if (store.empty()) return assemble_context(question, {}, token_budget);
  return assemble_context(question, retrieve(store, question, embedder, k, options), token_budget);
}

}  // namespace hpcplp
