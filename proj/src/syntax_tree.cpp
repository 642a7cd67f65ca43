#include "hpcplp/syntax_tree.hpp"

#include <fmt/format.h>

#include "hpcplp/errors.hpp"

extern "C" {
const TSLanguage* tree_sitter_c();
const TSLanguage* tree_sitter_cpp();
const TSLanguage* tree_sitter_python();
}

namespace hpcplp {

namespace {

const TSLanguage* grammar_for(Language lang) {
  switch (lang) {
    case Language::C: return tree_sitter_c();
    case Language::Cpp: return tree_sitter_cpp();
    case Language::Python: return tree_sitter_python();
    case Language::Unknown: break;
  }
  throw Error(ErrorCode::UnsupportedLanguage,
              "no grammar for language 'unknown'; AST tokenization needs c, cpp or python");
}

struct ParserDeleter {
  void operator()(TSParser* p) const noexcept { ts_parser_delete(p); }
};

// First error or missing node in pre-order.
std::optional<TSNode> first_error(TSNode node) {
  if (ts_node_is_error(node) || ts_node_is_missing(node)) return node;
  if (!ts_node_has_error(node)) return std::nullopt;
  const std::uint32_t n = ts_node_child_count(node);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (auto hit = first_error(ts_node_child(node, i))) return hit;
  }
  return std::nullopt;
}

}  // namespace

SyntaxTree SyntaxTree::parse_lenient(const CodeSnippet& snippet) {
  const TSLanguage* grammar = grammar_for(snippet.language());
  std::unique_ptr<TSParser, ParserDeleter> parser(ts_parser_new());
  if (!ts_parser_set_language(parser.get(), grammar)) {
    throw Error(ErrorCode::UnsupportedLanguage, "grammar ABI not supported by runtime");
  }
  const std::string& src = snippet.source();
  TSTree* tree = ts_parser_parse_string(parser.get(), nullptr, src.data(),
                                        static_cast<std::uint32_t>(src.size()));
  if (tree == nullptr) {
    throw ParseError(0, "parser returned no tree");
  }
  return SyntaxTree(src, snippet.language(), tree);
}

SyntaxTree SyntaxTree::parse(const CodeSnippet& snippet) {
  SyntaxTree tree = parse_lenient(snippet);
  if (auto bad = first_error(ts_tree_root_node(tree.tree_.get()))) {
    const std::uint32_t pos = ts_node_start_byte(*bad);
    throw ParseError(pos, fmt::format("{} source does not parse: {} at byte {}",
                                      to_string(snippet.language()),
                                      ts_node_is_missing(*bad) ? "missing token" : "syntax error",
                                      pos));
  }
  return tree;
}

SyntaxNode SyntaxTree::root() const { return {ts_tree_root_node(tree_.get()), source_}; }

bool SyntaxTree::has_error() const { return ts_node_has_error(ts_tree_root_node(tree_.get())); }

}  // namespace hpcplp
