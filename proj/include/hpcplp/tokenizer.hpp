#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hpcplp/code_snippet.hpp"

namespace hpcplp {

enum class TokenKind {
  Identifier,
  Keyword,
  Literal,
  Operator,
  Punctuation,
  Comment,
  PragmaDirective,
  Other,
};

std::string_view to_string(TokenKind kind);
TokenKind token_kind_from_string(std::string_view name);

/// Half-open byte range [start, end) into the snippet source.
struct ByteSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - start; }
  friend bool operator==(const ByteSpan&, const ByteSpan&) = default;
};

struct Token {
  std::string text;
  TokenKind kind = TokenKind::Other;
  ByteSpan span;

  friend bool operator==(const Token&, const Token&) = default;
};

enum class TokenizerMode { Lexical, AstTraversal };

struct TokenStream {
  std::vector<Token> tokens;
  TokenizerMode mode = TokenizerMode::Lexical;

  std::vector<std::string> texts() const;
};

bool is_keyword(Language lang, std::string_view word);

/// Lexes source without a grammar. Identifiers stay whole (no splitting on
/// underscores or case), comments become single Comment tokens, `#pragma`
/// lines become one PragmaDirective token and whitespace is dropped.
/// Throws Error(EmptySource) for empty or whitespace-only input.
TokenStream tokenize_lexical(const CodeSnippet& snippet);

/// Leaf tokens of the parse tree in source order. String and character
/// literals are single leaves; each `#pragma` line is one PragmaDirective.
/// Throws ParseError or Error(UnsupportedLanguage).
TokenStream tokenize_ast(const CodeSnippet& snippet);

/// tokenize_ast, degrading to tokenize_lexical (with a logged warning) when the
/// snippet does not parse or the language has no grammar.
TokenStream tokenize_ast_or_lexical(const CodeSnippet& snippet,
                                    std::vector<std::string>* warnings = nullptr);

/// Byte ranges of `#pragma` lines (including backslash continuations),
/// from the '#' up to the last non-blank character of the directive.
std::vector<ByteSpan> find_pragma_lines(std::string_view source);

nlohmann::json to_json(const TokenStream& stream);
TokenStream token_stream_from_json(const nlohmann::json& j);

}  // namespace hpcplp
