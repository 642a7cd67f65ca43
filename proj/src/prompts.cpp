#include "hpcplp/prompts.hpp"

namespace hpcplp {

namespace {

constexpr std::string_view kSimilarityTail =
    "  Determine whether the two code snippets are similar. If the code snippets are "
    "similar, output 1; otherwise, output 0.";
constexpr std::string_view kParallelismHead =
    "As an OpenMP expert, you will analyze the given code snippet to determine if it can "
    "be parallelized. Code: ";
constexpr std::string_view kParallelismTail = ". Answer yes or no first:";
constexpr std::string_view kQaHead =
    "You are an OpenMP expert. Please answer this question. Question: ";
constexpr std::string_view kContextHead = "Use the following context to answer.\nContext:\n";
constexpr std::string_view kContextSeparator = "\n---\n";

}  // namespace

std::string build_similarity_prompt(std::string_view code_1, std::string_view code_2) {
  std::string out = "Code 1: ";
  out += code_1;
  out += " Code 2: ";
  out += code_2;
  out += kSimilarityTail;
  return out;
}

std::string build_parallelism_prompt(std::string_view code) {
  std::string out(kParallelismHead);
  out += code;
  out += kParallelismTail;
  return out;
}

std::string build_qa_prompt(std::string_view question, std::span<const std::string> context_chunks) {
  std::string out;
  if (!context_chunks.empty()) {
    out += kContextHead;
    for (std::size_t i = 0; i < context_chunks.size(); ++i) {
      if (i) out += kContextSeparator;
      out += context_chunks[i];
    }
    out += "\n\n";
  }
  out += kQaHead;
  out += question;
  return out;
}

}  // namespace hpcplp
