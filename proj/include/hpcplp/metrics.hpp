#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hpcplp/code_snippet.hpp"

namespace hpcplp {

struct ClassificationCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  friend bool operator==(const ClassificationCounts&, const ClassificationCounts&) = default;
};

struct ClassificationMetrics {
  ClassificationCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Precision, recall and F1 of label 1. Any 0/0 is 0. Throws
/// Error(LengthMismatch), Error(EmptyInput) or Error(InvalidArgument) for
/// values other than 0 and 1.
ClassificationMetrics classification_metrics(std::span<const int> predictions,
                                             std::span<const int> labels);

struct BleuConfig {
  std::size_t max_n = 4;
  std::vector<double> weights;  // empty means uniform 1/max_n
  double smoothing_epsilon = 1e-9;
};

/// Lowercased whitespace tokens, the tokenization used by bleu and rouge_l.
std::vector<std::string> text_tokens(std::string_view text);

/// Corpus-free sentence BLEU over token sequences. Clipped n-gram
/// precisions, with a zero precision replaced by the epsilon, combined by a
/// weighted geometric mean and multiplied by the brevity penalty
/// (1 if c > r else exp(1 - r/c), r the closest reference length, shorter on
/// ties). Orders longer than the candidate have no n-grams and are left out,
/// with the remaining weights renormalized. Empty candidate scores 0.
/// Throws Error(EmptyInput) when there are no references.
double bleu_tokens(std::span<const std::string> candidate,
                   std::span<const std::vector<std::string>> references, const BleuConfig& cfg = {});
double bleu(std::string_view candidate, std::span<const std::string> references,
            const BleuConfig& cfg = {});

struct RougeL {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);
RougeL rouge_l_tokens(std::span<const std::string> candidate, std::span<const std::string> reference);
RougeL rouge_l(std::string_view candidate, std::string_view reference);

struct CodeBleuConfig {
  double alpha = 0.25;  // n-gram match
  double beta = 0.25;   // keyword-weighted n-gram match
  double gamma = 0.25;  // syntax subtree match
  double delta = 0.25;  // dataflow match
  double keyword_weight = 5.0;
  BleuConfig bleu;

  /// Throws Error(InvalidConfig) unless the weights are non-negative and sum to 1.
  void validate() const;
};

struct CodeBleuResult {
  double ngram = 0.0;
  double weighted_ngram = 0.0;
  double ast_match = 0.0;
  double dataflow_match = 0.0;
  double score = 0.0;
  /// Either side failed to parse, so only the two n-gram terms count.
  bool fallback = false;
};

/// Keyword-weighted BLEU: keyword unigrams count `keyword_weight` times in the
/// unigram precision; higher orders are plain.
double weighted_bleu_tokens(std::span<const std::string> candidate, const std::vector<bool>& cand_keyword,
                            std::span<const std::vector<std::string>> references,
                            double keyword_weight, const BleuConfig& cfg = {});

/// Throws Error(LanguageMismatch) when the languages differ.
CodeBleuResult codebleu(const CodeSnippet& candidate, const CodeSnippet& reference,
                        const CodeBleuConfig& cfg = {});

}  // namespace hpcplp
