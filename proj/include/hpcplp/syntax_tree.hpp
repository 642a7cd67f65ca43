#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include <tree_sitter/api.h>

#include "hpcplp/code_snippet.hpp"

namespace hpcplp {

/// Non-owning view of a parse-tree node. Valid while its SyntaxTree lives
/// and has not been moved from.
class SyntaxNode {
 public:
  SyntaxNode(TSNode node, std::string_view source) : node_(node), source_(source) {}

  std::string_view type() const { return ts_node_type(node_); }
  bool is_named() const { return ts_node_is_named(node_); }
  bool is_missing() const { return ts_node_is_missing(node_); }
  bool is_error() const { return ts_node_is_error(node_); }
  bool is_null() const { return ts_node_is_null(node_); }

  std::uint32_t start() const { return ts_node_start_byte(node_); }
  std::uint32_t end() const { return ts_node_end_byte(node_); }
  std::string_view text() const { return source_.substr(start(), end() - start()); }

  std::uint32_t child_count() const { return ts_node_child_count(node_); }
  SyntaxNode child(std::uint32_t i) const { return {ts_node_child(node_, i), source_}; }
  std::uint32_t named_child_count() const { return ts_node_named_child_count(node_); }
  SyntaxNode named_child(std::uint32_t i) const {
    return {ts_node_named_child(node_, i), source_};
  }
  SyntaxNode field(std::string_view name) const {
    return {ts_node_child_by_field_name(node_, name.data(),
                                        static_cast<std::uint32_t>(name.size())),
            source_};
  }
  /// Field name of the i-th child, empty when the child has none.
  std::string_view field_name_for_child(std::uint32_t i) const {
    const char* name = ts_node_field_name_for_child(node_, i);
    return name ? std::string_view(name) : std::string_view();
  }

 private:
  TSNode node_;
  std::string_view source_;
};

/// Owns a tree-sitter parse of one snippet. Parsing is stateless from the
/// caller's view: each SyntaxTree has its own parser run.
class SyntaxTree {
 public:
  /// Throws Error(UnsupportedLanguage) for Unknown, ParseError when the
  /// grammar produced error or missing nodes.
  static SyntaxTree parse(const CodeSnippet& snippet);

  /// Like parse() but keeps trees containing errors.
  static SyntaxTree parse_lenient(const CodeSnippet& snippet);

  SyntaxNode root() const;
  const std::string& source() const noexcept { return source_; }
  Language language() const noexcept { return language_; }
  bool has_error() const;

 private:
  struct TreeDeleter {
    void operator()(TSTree* tree) const noexcept { ts_tree_delete(tree); }
  };

  SyntaxTree(std::string source, Language language, TSTree* tree)
      : source_(std::move(source)), language_(language), tree_(tree) {}

  std::string source_;
  Language language_;
  std::unique_ptr<TSTree, TreeDeleter> tree_;
};

}  // namespace hpcplp
