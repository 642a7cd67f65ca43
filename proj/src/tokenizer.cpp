#include "hpcplp/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "hpcplp/errors.hpp"
#include "hpcplp/syntax_tree.hpp"

namespace hpcplp {

namespace {

const std::unordered_set<std::string_view>& c_keywords() {
  static const std::unordered_set<std::string_view> words = {
      "auto",     "break",    "case",     "char",      "const",    "continue", "default",
      "do",       "double",   "else",     "enum",      "extern",   "float",    "for",
      "goto",     "if",       "inline",   "int",       "long",     "register", "restrict",
      "return",   "short",    "signed",   "sizeof",    "static",   "struct",   "switch",
      "typedef",  "union",    "unsigned", "void",      "volatile", "while",    "_Bool",
      "_Complex", "_Atomic",  "_Alignas", "_Alignof",  "_Noreturn", "_Static_assert",
      "_Thread_local", "bool", "true",   "false",     "NULL"};
  return words;
}

const std::unordered_set<std::string_view>& cpp_only_keywords() {
  static const std::unordered_set<std::string_view> words = {
      "alignas",   "alignof",      "and",        "asm",         "catch",     "class",
      "concept",   "consteval",    "constexpr",  "constinit",   "const_cast", "co_await",
      "co_return", "co_yield",     "decltype",   "delete",      "dynamic_cast", "explicit",
      "export",    "friend",       "mutable",    "namespace",   "new",       "noexcept",
      "not",       "nullptr",      "operator",   "or",          "private",   "protected",
      "public",    "reinterpret_cast", "requires", "static_assert", "static_cast", "template",
      "this",      "thread_local", "throw",      "try",         "typeid",    "typename",
      "using",     "virtual",      "wchar_t",    "char8_t",     "char16_t",  "char32_t",
      "override",  "final"};
  return words;
}

const std::unordered_set<std::string_view>& python_keywords() {
  static const std::unordered_set<std::string_view> words = {
      "False", "None",   "True",    "and",    "as",       "assert", "async", "await",
      "break", "class",  "continue", "def",   "del",      "elif",   "else",  "except",
      "finally", "for",  "from",    "global", "if",       "import", "in",    "is",
      "lambda", "nonlocal", "not",  "or",     "pass",     "raise",  "return", "try",
      "while", "with",   "yield",   "match",  "case"};
  return words;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ident_start(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u == '_' || u >= 0x80;
}

bool is_ident_char(char c) {
  return is_ident_start(c) || (c >= '0' && c <= '9');
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::size_t utf8_length(char lead) {
  const auto c = static_cast<unsigned char>(lead);
  if (c < 0x80) return 1;
  if ((c & 0xE0) == 0xC0) return 2;
  if ((c & 0xF0) == 0xE0) return 3;
  return 4;
}

bool is_punctuation(std::string_view text) {
  static const std::unordered_set<std::string_view> punct = {
      "(", ")", "[", "]", "{", "}", ";", ",", ":", "..."};
  return punct.contains(text);
}

// Longest match first.
constexpr std::array<std::string_view, 3 + 6> kThreeCharOps = {
    "<<=", ">>=", "...", "->*", "<=>", "**=", "//=", "<<<", ">>>"};
constexpr std::array<std::string_view, 26> kTwoCharOps = {
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=",
    "*=", "/=", "%=", "&=", "|=", "^=", "::", ".*", "**", "//", ":=", "@=", "##"};
constexpr std::string_view kOneCharOps = "+-*/%=<>!~&|^?:.,;()[]{}@#";

bool all_space(std::string_view s) {
  return std::all_of(s.begin(), s.end(), is_space);
}

// End of a logical line starting at `pos`, following backslash continuations.
// Returns the index of the terminating '\n' (or size).
std::size_t logical_line_end(std::string_view src, std::size_t pos) {
  while (true) {
    const std::size_t nl = src.find('\n', pos);
    if (nl == std::string_view::npos) return src.size();
    std::size_t k = nl;
    if (k > 0 && src[k - 1] == '\r') --k;
    if (k > pos && src[k - 1] == '\\') {
      pos = nl + 1;
      continue;
    }
    return nl;
  }
}

std::size_t trim_right(std::string_view src, std::size_t begin, std::size_t end) {
  while (end > begin && is_space(src[end - 1])) --end;
  return end;
}

bool starts_pragma(std::string_view src, std::size_t hash_pos) {
  std::size_t k = hash_pos + 1;
  while (k < src.size() && (src[k] == ' ' || src[k] == '\t')) ++k;
  if (src.substr(k, 6) != "pragma") return false;
  k += 6;
  return k >= src.size() || !is_ident_char(src[k]);
}

class Lexer {
 public:
  Lexer(std::string_view src, Language lang)
      : src_(src), python_(lang == Language::Python), lang_(lang) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    bool line_start = true;
    std::size_t i = 0;
    while (i < src_.size()) {
      const char c = src_[i];
      if (is_space(c)) {
        if (c == '\n') line_start = true;
        ++i;
        continue;
      }
      const std::size_t start = i;
      TokenKind kind = TokenKind::Other;

      if (!python_ && c == '#' && line_start) {
        const std::size_t end = trim_right(src_, start, logical_line_end(src_, start));
        kind = starts_pragma(src_, start) ? TokenKind::PragmaDirective : TokenKind::Other;
        i = end;
      } else if (python_ && c == '#') {
        i = line_comment_end(start);
        kind = TokenKind::Comment;
      } else if (!python_ && src_.substr(i, 2) == "//") {
        i = line_comment_end(start);
        kind = TokenKind::Comment;
      } else if (!python_ && src_.substr(i, 2) == "/*") {
        const std::size_t close = src_.find("*/", i + 2);
        i = close == std::string_view::npos ? src_.size() : close + 2;
        kind = TokenKind::Comment;
      } else if (std::size_t end = string_literal_end(i); end != 0) {
        i = end;
        kind = TokenKind::Literal;
      } else if (is_ident_start(c)) {
        while (i < src_.size() && is_ident_char(src_[i])) {
          i += utf8_length(src_[i]);
        }
        i = std::min(i, src_.size());
        kind = is_keyword(lang_, src_.substr(start, i - start)) ? TokenKind::Keyword
                                                                 : TokenKind::Identifier;
      } else if (is_digit(c) || (c == '.' && i + 1 < src_.size() && is_digit(src_[i + 1]))) {
        i = number_end(i);
        kind = TokenKind::Literal;
      } else if (std::size_t len = operator_length(i); len != 0) {
        i += len;
        const std::string_view text = src_.substr(start, len);
        kind = is_punctuation(text) ? TokenKind::Punctuation : TokenKind::Operator;
      } else {
        i = std::min(src_.size(), i + utf8_length(c));
        kind = TokenKind::Other;
      }
      line_start = false;
      out.push_back(Token{std::string(src_.substr(start, i - start)), kind, {start, i}});
    }
    return out;
  }

 private:
  std::size_t line_comment_end(std::size_t pos) const {
    std::size_t nl = src_.find('\n', pos);
    if (nl == std::string_view::npos) nl = src_.size();
    return trim_right(src_, pos, nl);
  }

  // Returns one past the closing quote when a string/char literal (with any
  // prefix) starts at `pos`, else 0.
  std::size_t string_literal_end(std::size_t pos) const {
    std::size_t k = pos;
    while (k < src_.size() && k - pos < 3 && std::isalnum(static_cast<unsigned char>(src_[k]))) ++k;
    if (k >= src_.size() || (src_[k] != '"' && src_[k] != '\'')) return 0;
    const std::string_view prefix = src_.substr(pos, k - pos);
    bool raw = false;
    if (python_) {
      for (char p : prefix) {
        const char l = static_cast<char>(std::tolower(static_cast<unsigned char>(p)));
        if (l != 'r' && l != 'b' && l != 'u' && l != 'f') return 0;
        if (l == 'r') raw = true;
      }
      if (prefix.size() > 2) return 0;
      return python_string_end(k, raw);
    }
    if (!(prefix.empty() || prefix == "L" || prefix == "u" || prefix == "U" || prefix == "u8" ||
          prefix == "R" || prefix == "LR" || prefix == "uR" || prefix == "UR" || prefix == "u8R"))
      return 0;
    if (!prefix.empty() && prefix.back() == 'R' && src_[k] == '"' && lang_ != Language::C) {
      return raw_string_end(k);
    }
    return quoted_end(k, src_[k], true);
  }

  std::size_t quoted_end(std::size_t open, char quote, bool stop_at_newline) const {
    std::size_t k = open + 1;
    while (k < src_.size()) {
      const char ch = src_[k];
      if (ch == '\\') {
        k += 2;
        continue;
      }
      if (ch == quote) return k + 1;
      if (ch == '\n' && stop_at_newline) return trim_right(src_, open, k);
      ++k;
    }
    return src_.size();
  }

  std::size_t python_string_end(std::size_t open, bool /*raw*/) const {
    const char quote = src_[open];
    const std::string triple(3, quote);
    if (src_.substr(open, 3) == triple) {
      std::size_t k = open + 3;
      while (k < src_.size()) {
        if (src_[k] == '\\') {
          k += 2;
          continue;
        }
        if (src_.substr(k, 3) == triple) return k + 3;
        ++k;
      }
      return src_.size();
    }
    return quoted_end(open, quote, true);
  }

  std::size_t raw_string_end(std::size_t open) const {
    const std::size_t paren = src_.find('(', open + 1);
    if (paren == std::string_view::npos) return quoted_end(open, '"', true);
    const std::string close = ")" + std::string(src_.substr(open + 1, paren - open - 1)) + "\"";
    const std::size_t end = src_.find(close, paren + 1);
    return end == std::string_view::npos ? src_.size() : end + close.size();
  }

  std::size_t number_end(std::size_t pos) const {
    std::size_t k = pos;
    while (k < src_.size()) {
      const char ch = src_[k];
      if (is_ident_char(ch) || ch == '.' || (ch == '\'' && !python_)) {
        ++k;
        continue;
      }
      if ((ch == '+' || ch == '-') && k > pos) {
        const char prev = static_cast<char>(std::tolower(static_cast<unsigned char>(src_[k - 1])));
        const bool hex = src_.substr(pos, 2) == "0x" || src_.substr(pos, 2) == "0X";
        if ((prev == 'e' && !hex) || (prev == 'p' && hex)) {
          ++k;
          continue;
        }
      }
      break;
    }
    return k;
  }

  std::size_t operator_length(std::size_t pos) const {
    const std::string_view rest = src_.substr(pos);
    for (auto op : kThreeCharOps) {
      if (rest.starts_with(op)) return 3;
    }
    for (auto op : kTwoCharOps) {
      if (rest.starts_with(op)) return 2;
    }
    return kOneCharOps.find(rest.front()) != std::string_view::npos ? 1 : 0;
  }

  std::string_view src_;
  bool python_;
  Language lang_;
};

// --- AST leaves -----------------------------------------------------------

bool is_atomic_leaf(std::string_view type) {
  static const std::unordered_set<std::string_view> atomic = {
      "string_literal", "char_literal", "raw_string_literal", "system_lib_string",
      "string",         "user_defined_literal", "number_literal", "integer", "float"};
  return atomic.contains(type);
}

TokenKind classify_leaf(const SyntaxNode& node, Language lang) {
  const std::string_view type = node.type();
  const std::string_view text = node.text();
  if (type == "comment") return TokenKind::Comment;
  if (node.is_named()) {
    static const std::unordered_set<std::string_view> literals = {
        "string_literal", "char_literal", "raw_string_literal", "system_lib_string",
        "string",         "user_defined_literal", "number_literal", "integer",
        "float",          "true", "false", "null", "nullptr", "none", "concatenated_string"};
    static const std::unordered_set<std::string_view> identifiers = {
        "identifier",          "field_identifier",     "type_identifier",
        "namespace_identifier", "statement_identifier", "property_identifier",
        "module_name"};
    static const std::unordered_set<std::string_view> keywords = {
        "primitive_type", "preproc_directive", "this", "auto", "storage_class_specifier",
        "type_qualifier", "ms_call_modifier"};
    if (literals.contains(type)) return TokenKind::Literal;
    if (identifiers.contains(type)) return TokenKind::Identifier;
    if (keywords.contains(type)) return TokenKind::Keyword;
    if (type == "ellipsis") return TokenKind::Punctuation;
    if (!text.empty() && is_ident_start(text.front()) &&
        std::all_of(text.begin(), text.end(), is_ident_char)) {
      return is_keyword(lang, text) ? TokenKind::Keyword : TokenKind::Identifier;
    }
    return TokenKind::Other;
  }
  if (!text.empty() && (is_ident_start(text.front()) || text.front() == '#')) {
    return TokenKind::Keyword;
  }
  return is_punctuation(text) ? TokenKind::Punctuation : TokenKind::Operator;
}

bool intersects(const ByteSpan& a, std::size_t start, std::size_t end) {
  return a.start < end && start < a.end;
}

void collect_leaves(const SyntaxNode& node, Language lang, const std::vector<ByteSpan>& pragmas,
                    std::vector<Token>& out) {
  const std::size_t start = node.start();
  const std::size_t end = node.end();
  if (end <= start) return;
  const bool leaf = node.child_count() == 0 || is_atomic_leaf(node.type());
  if (leaf) {
    for (const auto& p : pragmas) {
      if (intersects(p, start, end)) return;
    }
    out.push_back(Token{std::string(node.text()), classify_leaf(node, lang), {start, end}});
    return;
  }
  const std::uint32_t n = node.child_count();
  for (std::uint32_t i = 0; i < n; ++i) collect_leaves(node.child(i), lang, pragmas, out);
}

}  // namespace

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Identifier: return "Identifier";
    case TokenKind::Keyword: return "Keyword";
    case TokenKind::Literal: return "Literal";
    case TokenKind::Operator: return "Operator";
    case TokenKind::Punctuation: return "Punctuation";
    case TokenKind::Comment: return "Comment";
    case TokenKind::PragmaDirective: return "PragmaDirective";
    case TokenKind::Other: return "Other";
  }
  return "Other";
}

TokenKind token_kind_from_string(std::string_view name) {
  static constexpr std::array kinds = {
      TokenKind::Identifier, TokenKind::Keyword,         TokenKind::Literal,
      TokenKind::Operator,   TokenKind::Punctuation,     TokenKind::Comment,
      TokenKind::PragmaDirective, TokenKind::Other};
  for (auto k : kinds) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown token kind '" + std::string(name) + "'");
}

std::vector<std::string> TokenStream::texts() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

bool is_keyword(Language lang, std::string_view word) {
  switch (lang) {
    case Language::Python: return python_keywords().contains(word);
    case Language::Cpp: return c_keywords().contains(word) || cpp_only_keywords().contains(word);
    case Language::C:
    case Language::Unknown: return c_keywords().contains(word);
  }
  return false;
}

std::vector<ByteSpan> find_pragma_lines(std::string_view source) {
  // Equivalent to matching ^\s*#\s*pragma\b.*$ per line, plus continuations.
  std::vector<ByteSpan> out;
  std::size_t line = 0;
  while (line < source.size()) {
    std::size_t k = line;
    while (k < source.size() && (source[k] == ' ' || source[k] == '\t')) ++k;
    std::size_t next_line;
    if (k < source.size() && source[k] == '#' && starts_pragma(source, k)) {
      const std::size_t end = logical_line_end(source, k);
      out.push_back({k, trim_right(source, k, end)});
      next_line = end + 1;
    } else {
      const std::size_t nl = source.find('\n', line);
      next_line = nl == std::string_view::npos ? source.size() : nl + 1;
    }
    line = next_line;
  }
  return out;
}

TokenStream tokenize_lexical(const CodeSnippet& snippet) {
  if (all_space(snippet.source())) {
    throw Error(ErrorCode::EmptySource, "cannot tokenize empty or whitespace-only source");
  }
  return TokenStream{Lexer(snippet.source(), snippet.language()).run(), TokenizerMode::Lexical};
}

TokenStream tokenize_ast(const CodeSnippet& snippet) {
  if (snippet.language() == Language::Unknown) {
    throw Error(ErrorCode::UnsupportedLanguage,
                "AST tokenization needs a c, cpp or python snippet");
  }
  if (all_space(snippet.source())) {
    throw Error(ErrorCode::EmptySource, "cannot tokenize empty or whitespace-only source");
  }
  const SyntaxTree tree = SyntaxTree::parse(snippet);
  const bool c_family = snippet.language() != Language::Python;
  const std::vector<ByteSpan> pragmas =
      c_family ? find_pragma_lines(snippet.source()) : std::vector<ByteSpan>{};

  std::vector<Token> leaves;
  collect_leaves(tree.root(), snippet.language(), pragmas, leaves);

  std::vector<Token> merged;
  merged.reserve(leaves.size() + pragmas.size());
  auto leaf = leaves.begin();
  for (const auto& p : pragmas) {
    while (leaf != leaves.end() && leaf->span.start < p.start) merged.push_back(*leaf++);
    merged.push_back(Token{snippet.source().substr(p.start, p.size()),
                           TokenKind::PragmaDirective, p});
  }
  merged.insert(merged.end(), leaf, leaves.end());
  return TokenStream{std::move(merged), TokenizerMode::AstTraversal};
}

TokenStream tokenize_ast_or_lexical(const CodeSnippet& snippet,
                                    std::vector<std::string>* warnings) {
  try {
    return tokenize_ast(snippet);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ParseError && e.code() != ErrorCode::UnsupportedLanguage) throw;
    const std::string msg = std::string("falling back to lexical tokenization: ") + e.what();
    spdlog::warn("{}", msg);
    if (warnings) warnings->push_back(msg);
    return tokenize_lexical(snippet);
  }
}

nlohmann::json to_json(const TokenStream& stream) {
  nlohmann::json tokens = nlohmann::json::array();
  for (const auto& t : stream.tokens) {
    tokens.push_back({{"t", t.text}, {"k", to_string(t.kind)}, {"s", {t.span.start, t.span.end}}});
  }
  return {{"mode", stream.mode == TokenizerMode::Lexical ? "lexical" : "ast"},
          {"tokens", std::move(tokens)}};
}

TokenStream token_stream_from_json(const nlohmann::json& j) {
  TokenStream out;
  out.mode = j.at("mode").get<std::string>() == "ast" ? TokenizerMode::AstTraversal
                                                       : TokenizerMode::Lexical;
  for (const auto& t : j.at("tokens")) {
    out.tokens.push_back(Token{t.at("t").get<std::string>(),
                               token_kind_from_string(t.at("k").get<std::string>()),
                               {t.at("s").at(0).get<std::size_t>(), t.at("s").at(1).get<std::size_t>()}});
  }
  return out;
}

}  // namespace hpcplp
