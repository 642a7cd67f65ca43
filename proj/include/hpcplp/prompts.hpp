#pragma once

#include <span>
#include <string>
#include <string_view>

namespace hpcplp {

/// Prompt builders for the three tasks. Substitution is a single pass, so
/// braces inside inserted code are copied verbatim.
std::string build_similarity_prompt(std::string_view code_1, std::string_view code_2);
std::string build_parallelism_prompt(std::string_view code);

/// Plain question prompt, or with chunks prepended as
/// "Use the following context to answer.\nContext:\n" + chunks joined by
/// "\n---\n" + "\n\n" + question prompt.
std::string build_qa_prompt(std::string_view question,
                            std::span<const std::string> context_chunks = {});

}  // namespace hpcplp
