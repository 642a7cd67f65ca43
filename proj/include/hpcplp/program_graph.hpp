#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hpcplp/code_snippet.hpp"
#include "hpcplp/syntax_tree.hpp"
#include "hpcplp/tokenizer.hpp"

namespace hpcplp {

enum class GraphNodeKind { Statement, Identifier, CallSite };
enum class GraphEdgeKind { AstChild, NextStatement, DefUse };

std::string_view to_string(GraphNodeKind kind);
std::string_view to_string(GraphEdgeKind kind);

struct GraphNode {
  std::size_t id = 0;
  std::string label;  // statement node type, identifier name, or callee text
  GraphNodeKind kind = GraphNodeKind::Statement;
  ByteSpan span;
};

struct GraphEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  GraphEdgeKind kind = GraphEdgeKind::AstChild;

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

/// Simplified program graph: statements, identifier occurrences and call
/// sites, joined by parse-tree containment, statement order within a block,
/// and intra-function def-use links.
struct ProgramGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  std::size_t count(GraphNodeKind kind) const;
  std::size_t count(GraphEdgeKind kind) const;
  std::vector<GraphEdge> edges_of(GraphEdgeKind kind) const;
};

/// Throws ParseError / Error(UnsupportedLanguage) like tokenize_ast.
ProgramGraph build_program_graph(const CodeSnippet& snippet);
ProgramGraph build_program_graph(const SyntaxTree& tree);

nlohmann::json to_json(const ProgramGraph& graph);

}  // namespace hpcplp
