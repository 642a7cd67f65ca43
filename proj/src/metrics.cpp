#include "hpcplp/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "hpcplp/errors.hpp"
#include "hpcplp/model.hpp"
#include "hpcplp/program_graph.hpp"
#include "hpcplp/syntax_tree.hpp"
#include "hpcplp/tokenizer.hpp"

namespace hpcplp {

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

using NgramCounts = std::unordered_map<std::string, std::size_t>;

NgramCounts ngrams(std::span<const std::string> tokens, std::size_t n) {
  NgramCounts out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t k = 1; k < n; ++k) {
      key += '\x1f';
      key += tokens[i + k];
    }
    ++out[key];
  }
  return out;
}

// unigram_weight maps a unigram to its weight in the order-1 precision; null
// means every unigram weighs 1.
using UnigramWeight = std::function<double(const std::string&)>;

double bleu_impl(std::span<const std::string> cand, std::span<const std::vector<std::string>> refs,
                 const BleuConfig& cfg, const UnigramWeight& unigram_weight) {
  if (refs.empty()) throw Error(ErrorCode::EmptyInput, "bleu needs at least one reference");
  if (cfg.max_n == 0) throw Error(ErrorCode::InvalidConfig, "bleu max_n must be at least 1");
  if (!cfg.weights.empty() && cfg.weights.size() != cfg.max_n) {
    throw Error(ErrorCode::InvalidConfig,
                fmt::format("bleu has {} weights for max_n {}", cfg.weights.size(), cfg.max_n));
  }
  const std::size_t c = cand.size();
  if (c == 0) return 0.0;

  double log_sum = 0.0;
  double weight_sum = 0.0;
  for (std::size_t n = 1; n <= std::min(cfg.max_n, c); ++n) {
    const double w = cfg.weights.empty() ? 1.0 / static_cast<double>(cfg.max_n) : cfg.weights[n - 1];
    const auto cand_counts = ngrams(cand, n);
    NgramCounts max_ref;
    for (const auto& ref : refs) {
      for (const auto& [g, k] : ngrams(ref, n)) max_ref[g] = std::max(max_ref[g], k);
    }
    double matched = 0.0, total = 0.0;
    for (const auto& [g, k] : cand_counts) {
      const auto it = max_ref.find(g);
      const double clipped = static_cast<double>(it == max_ref.end() ? 0 : std::min(k, it->second));
      const double gw = (n == 1 && unigram_weight) ? unigram_weight(g) : 1.0;
      matched += gw * clipped;
      total += gw * static_cast<double>(k);
    }
    double p = ratio(matched, total);
    if (p == 0.0) p = cfg.smoothing_epsilon;
    log_sum += w * std::log(p);
    weight_sum += w;
  }
  const double geo = weight_sum > 0.0 ? std::exp(log_sum / weight_sum) : 1.0;

  std::size_t r = refs[0].size();
  for (const auto& ref : refs) {
    const auto d = [&](std::size_t len) { return len > c ? len - c : c - len; };
    if (d(ref.size()) < d(r) || (d(ref.size()) == d(r) && ref.size() < r)) r = ref.size();
  }
  const double bp = c > r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  return std::clamp(geo * bp, 0.0, 1.0);
}

struct CodeTokens {
  std::vector<std::string> texts;
  std::vector<bool> keyword;
};

CodeTokens code_tokens(const CodeSnippet& snippet) {
  CodeTokens out;
  TokenStream ts;
  try {
    ts = tokenize_lexical(snippet);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptySource) return out;
    throw;
  }
  for (const auto& t : ts.tokens) {
    if (t.kind == TokenKind::Comment) continue;
    out.texts.push_back(t.text);
    out.keyword.push_back(t.kind == TokenKind::Keyword);
  }
  return out;
}

// Named-node S-expression of each subtree with at least one named child.
std::string collect_subtrees(const SyntaxNode& node, std::map<std::string, std::size_t>& out) {
  std::string s = "(";
  s += node.type();
  const auto n = node.named_child_count();
  for (std::uint32_t i = 0; i < n; ++i) {
    s += ' ';
    s += collect_subtrees(node.named_child(i), out);
  }
  s += ')';
  if (n > 0) ++out[s];
  return s;
}

template <typename Key>
double multiset_match(const std::map<Key, std::size_t>& cand, const std::map<Key, std::size_t>& ref) {
  std::size_t total_ref = 0, total_cand = 0, matched = 0;
  for (const auto& [k, v] : ref) total_ref += v;
  for (const auto& [k, v] : cand) {
    total_cand += v;
    if (const auto it = ref.find(k); it != ref.end()) matched += std::min(v, it->second);
  }
  if (total_ref == 0) return total_cand == 0 ? 1.0 : 0.0;
  return static_cast<double>(matched) / static_cast<double>(total_ref);
}

std::map<std::pair<std::string, std::string>, std::size_t> normalized_dataflow(const SyntaxTree& tree) {
  const auto g = build_program_graph(tree);
  std::vector<const GraphNode*> idents;
  for (const auto& n : g.nodes) {
    if (n.kind == GraphNodeKind::Identifier) idents.push_back(&n);
  }
  std::stable_sort(idents.begin(), idents.end(),
                   [](const GraphNode* a, const GraphNode* b) { return a->span.start < b->span.start; });
  std::map<std::string, std::string> rename;
  for (const auto* n : idents) {
    if (!rename.contains(n->label)) rename.emplace(n->label, fmt::format("var_{}", rename.size()));
  }
  const auto norm = [&](const std::string& label) {
    const auto it = rename.find(label);
    return it == rename.end() ? label : it->second;
  };
  std::map<std::pair<std::string, std::string>, std::size_t> out;
  for (const auto& e : g.edges_of(GraphEdgeKind::DefUse)) {
    ++out[{norm(g.nodes[e.src].label), norm(g.nodes[e.dst].label)}];
  }
  return out;
}

}  // namespace

ClassificationMetrics classification_metrics(std::span<const int> predictions,
                                             std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, fmt::format("{} predictions for {} labels",
                                                       predictions.size(), labels.size()));
  }
  if (predictions.empty()) throw Error(ErrorCode::EmptyInput, "no predictions to score");
  ClassificationMetrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int p = predictions[i], y = labels[i];
    if ((p != 0 && p != 1) || (y != 0 && y != 1)) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("non-binary value at index {}", i));
    }
    if (p == 1 && y == 1) ++m.counts.tp;
    else if (p == 1) ++m.counts.fp;
    else if (y == 1) ++m.counts.fn;
    else ++m.counts.tn;
  }
  const auto tp = static_cast<double>(m.counts.tp);
  m.precision = ratio(tp, tp + static_cast<double>(m.counts.fp));
  m.recall = ratio(tp, tp + static_cast<double>(m.counts.fn));
  m.f1 = harmonic(m.precision, m.recall);
  return m;
}

std::vector<std::string> text_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto t : whitespace_tokens(text)) {
    std::string s(t);
    for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    out.push_back(std::move(s));
  }
  return out;
}

double bleu_tokens(std::span<const std::string> candidate,
                   std::span<const std::vector<std::string>> references, const BleuConfig& cfg) {
  return bleu_impl(candidate, references, cfg, nullptr);
}

double bleu(std::string_view candidate, std::span<const std::string> references, const BleuConfig& cfg) {
  std::vector<std::vector<std::string>> refs;
  refs.reserve(references.size());
  for (const auto& r : references) refs.push_back(text_tokens(r));
  return bleu_tokens(text_tokens(candidate), refs, cfg);
}

double weighted_bleu_tokens(std::span<const std::string> candidate, const std::vector<bool>& cand_keyword,
                            std::span<const std::vector<std::string>> references,
                            double keyword_weight, const BleuConfig& cfg) {
  if (candidate.size() != cand_keyword.size()) {
    throw Error(ErrorCode::LengthMismatch, "keyword flags do not match candidate tokens");
  }
  std::unordered_map<std::string, bool> is_kw;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    if (cand_keyword[i]) is_kw[candidate[i]] = true;
  }
  return bleu_impl(candidate, references, cfg, [&](const std::string& g) {
    return is_kw.contains(g) ? keyword_weight : 1.0;
  });
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeL rouge_l_tokens(std::span<const std::string> candidate, std::span<const std::string> reference) {
  const auto l = static_cast<double>(lcs_length(candidate, reference));
  RougeL out;
  out.recall = ratio(l, static_cast<double>(reference.size()));
  out.precision = ratio(l, static_cast<double>(candidate.size()));
  out.f1 = harmonic(out.precision, out.recall);
  return out;
}

RougeL rouge_l(std::string_view candidate, std::string_view reference) {
  return rouge_l_tokens(text_tokens(candidate), text_tokens(reference));
}

void CodeBleuConfig::validate() const {
  for (double w : {alpha, beta, gamma, delta}) {
    if (w < 0.0) throw Error(ErrorCode::InvalidConfig, "codebleu weights must be non-negative");
  }
  if (std::abs(alpha + beta + gamma + delta - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidConfig, "codebleu weights must sum to 1");
  }
}

CodeBleuResult codebleu(const CodeSnippet& candidate, const CodeSnippet& reference,
                        const CodeBleuConfig& cfg) {
  cfg.validate();
  if (candidate.language() != reference.language()) {
    throw Error(ErrorCode::LanguageMismatch,
                fmt::format("candidate is {}, reference is {}", to_string(candidate.language()),
                            to_string(reference.language())));
  }
  const auto cand = code_tokens(candidate);
  const auto ref = code_tokens(reference);
  const std::vector<std::vector<std::string>> refs{ref.texts};

  CodeBleuResult out;
  out.ngram = bleu_tokens(cand.texts, refs, cfg.bleu);
  out.weighted_ngram =
      weighted_bleu_tokens(cand.texts, cand.keyword, refs, cfg.keyword_weight, cfg.bleu);

  try {
    const auto cand_tree = SyntaxTree::parse(candidate);
    const auto ref_tree = SyntaxTree::parse(reference);
    std::map<std::string, std::size_t> cand_sub, ref_sub;
    collect_subtrees(cand_tree.root(), cand_sub);
    collect_subtrees(ref_tree.root(), ref_sub);
    out.ast_match = multiset_match(cand_sub, ref_sub);
    out.dataflow_match = multiset_match(normalized_dataflow(cand_tree), normalized_dataflow(ref_tree));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ParseError && e.code() != ErrorCode::UnsupportedLanguage &&
        e.code() != ErrorCode::EmptySource) {
      throw;
    }
    spdlog::warn("codebleu: {}; scoring n-gram terms only", e.what());
    out.fallback = true;
    const double ab = cfg.alpha + cfg.beta;
    out.score = ab == 0.0 ? 0.0 : (cfg.alpha * out.ngram + cfg.beta * out.weighted_ngram) / ab;
    return out;
  }
  out.score = cfg.alpha * out.ngram + cfg.beta * out.weighted_ngram + cfg.gamma * out.ast_match +
              cfg.delta * out.dataflow_match;
  return out;
}

}  // namespace hpcplp
