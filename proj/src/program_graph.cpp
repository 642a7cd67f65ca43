#include "hpcplp/program_graph.hpp"

#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "hpcplp/errors.hpp"

namespace hpcplp {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

enum class Access { Read, Write, ReadWrite, Declare };

bool is_container(std::string_view type) {
  static const std::unordered_set<std::string_view> containers = {
      "translation_unit", "module",         "compound_statement", "block",
      "declaration_list", "field_declaration_list", "preproc_if", "preproc_ifdef",
      "preproc_else",     "preproc_elif",   "case_statement"};
  return containers.contains(type);
}

bool is_statement_type(std::string_view type) {
  if (type == "compound_statement" || type == "block") return false;
  return type.ends_with("_statement") || type == "declaration" ||
         type == "function_definition" || type == "class_definition" ||
         type == "decorated_definition";
}

// Declarations that carry no dataflow we model.
bool is_opaque(std::string_view type) {
  return type == "preproc_def" || type == "preproc_function_def" || type == "preproc_call" ||
         type == "preproc_include" || type == "global_statement" ||
         type == "nonlocal_statement";
}

bool is_function_like(std::string_view type) {
  return type == "function_definition" || type == "lambda" || type == "lambda_expression" ||
         type == "class_definition";
}

// LHS shapes through which a write reaches an identifier.
bool passes_write(std::string_view type) {
  static const std::unordered_set<std::string_view> through = {
      "identifier",        "parenthesized_expression", "parenthesized_declarator",
      "pointer_declarator", "array_declarator",       "reference_declarator",
      "pattern_list",      "tuple_pattern",            "list_pattern",
      "tuple",             "list",                     "list_splat_pattern",
      "dictionary_splat_pattern", "as_pattern_target", "expression_list",
      "init_declarator"};
  return through.contains(type);
}

class GraphBuilder {
 public:
  using Scope = std::unordered_map<std::string, std::size_t>;

  ProgramGraph build(const SyntaxNode& root) {
    Scope file_scope;
    visit_children(root, kNone, file_scope, Access::Read);
    return std::move(graph_);
  }

 private:
  std::size_t add_node(std::string label, GraphNodeKind kind, const SyntaxNode& node,
                       std::size_t parent) {
    const std::size_t id = graph_.nodes.size();
    graph_.nodes.push_back(GraphNode{id, std::move(label), kind, {node.start(), node.end()}});
    if (parent != kNone) graph_.edges.push_back({parent, id, GraphEdgeKind::AstChild});
    return id;
  }

  void visit_children(const SyntaxNode& node, std::size_t parent, Scope& scope, Access access) {
    const bool chain = is_container(node.type());
    std::size_t prev = kNone;
    const std::uint32_t n = node.child_count();
    for (std::uint32_t i = 0; i < n; ++i) {
      const std::size_t stmt = visit(node.child(i), parent, scope, access, chain);
      if (chain && stmt != kNone) {
        if (prev != kNone) graph_.edges.push_back({prev, stmt, GraphEdgeKind::NextStatement});
        prev = stmt;
      }
    }
  }

  void visit_field(const SyntaxNode& node, std::string_view field, std::size_t parent,
                   Scope& scope, Access access) {
    const SyntaxNode child = node.field(field);
    if (!child.is_null()) visit(child, parent, scope, access, false);
  }

  void identifier(const SyntaxNode& node, std::size_t parent, Scope& scope, Access access) {
    std::string name(node.text());
    const std::size_t id = add_node(name, GraphNodeKind::Identifier, node, parent);
    if (access == Access::Read || access == Access::ReadWrite) {
      if (auto it = scope.find(name); it != scope.end()) {
        graph_.edges.push_back({it->second, id, GraphEdgeKind::DefUse});
      }
    }
    if (access == Access::Write || access == Access::ReadWrite) scope[name] = id;
  }

  // Returns the Statement node id when `node` became one, else kNone.
  std::size_t visit(const SyntaxNode& node, std::size_t parent, Scope& scope, Access access,
                    bool in_container) {
    if (!node.is_named() || node.is_missing()) return kNone;
    const std::string_view type = node.type();
    if (type == "comment") return kNone;

    std::size_t self = parent;
    std::size_t stmt = kNone;
    if ((in_container || is_statement_type(type)) && type != "compound_statement" &&
        type != "block") {
      stmt = self = add_node(std::string(type), GraphNodeKind::Statement, node, parent);
    }

    if (type == "identifier") {
      identifier(node, parent, scope, access);
      return stmt;
    }
    if (is_opaque(type)) return stmt;

    if (is_function_like(type)) {
      function(node, self, scope);
    } else if (type == "init_declarator") {
      visit_field(node, "value", self, scope, Access::Read);
      visit_field(node, "declarator", self, scope, Access::Write);
    } else if (type == "assignment_expression" || type == "assignment" ||
               type == "augmented_assignment") {
      const SyntaxNode op = node.field("operator");
      const bool plain = type == "assignment" || (!op.is_null() && op.text() == "=");
      visit_field(node, "right", self, scope, Access::Read);
      visit_field(node, "left", self, scope, plain ? Access::Write : Access::ReadWrite);
    } else if (type == "update_expression") {
      visit_field(node, "argument", self, scope, Access::ReadWrite);
    } else if (type == "for_statement" && !node.field("left").is_null()) {
      // python: for <left> in <right>: <body>
      visit_field(node, "right", self, scope, Access::Read);
      visit_field(node, "left", self, scope, Access::Write);
      visit_field(node, "body", self, scope, Access::Read);
      visit_field(node, "alternative", self, scope, Access::Read);
    } else if (type == "for_in_clause") {
      visit_field(node, "right", self, scope, Access::Read);
      visit_field(node, "left", self, scope, Access::Write);
    } else if (type == "for_range_loop") {
      visit_field(node, "right", self, scope, Access::Read);
      visit_field(node, "declarator", self, scope, Access::Write);
      visit_field(node, "body", self, scope, Access::Read);
    } else if (type == "call_expression" || type == "call") {
      call(node, self, scope);
    } else if (type == "keyword_argument") {
      visit_field(node, "value", self, scope, Access::Read);
    } else if (type == "attribute") {
      visit_field(node, "object", self, scope, Access::Read);
    } else if (type == "import_statement" || type == "import_from_statement" ||
               type == "aliased_import") {
      visit_children(node, self, scope, Access::Write);
    } else if (type == "as_pattern") {
      const std::uint32_t n = node.child_count();
      for (std::uint32_t i = 0; i < n; ++i) {
        const bool alias = node.field_name_for_child(i) == "alias";
        visit(node.child(i), self, scope, alias ? Access::Write : Access::Read, false);
      }
    } else if (type == "declaration" || type == "field_declaration") {
      const std::uint32_t n = node.child_count();
      for (std::uint32_t i = 0; i < n; ++i) {
        const bool declarator = node.field_name_for_child(i) == "declarator";
        visit(node.child(i), self, scope, declarator ? Access::Declare : Access::Read, false);
      }
    } else if (access != Access::Read && passes_write(type)) {
      // Write flows only into declarator-ish children; sizes/indices are reads.
      const std::uint32_t n = node.child_count();
      for (std::uint32_t i = 0; i < n; ++i) {
        const std::string_view f = node.field_name_for_child(i);
        const bool target = f.empty() || f == "declarator";
        visit(node.child(i), self, scope, target ? access : Access::Read, false);
      }
    } else {
      visit_children(node, self, scope, Access::Read);
    }
    return stmt;
  }

  void call(const SyntaxNode& node, std::size_t parent, Scope& scope) {
    const SyntaxNode callee = node.field("function");
    const std::string label = callee.is_null() ? std::string("<call>") : std::string(callee.text());
    const std::size_t id = add_node(label, GraphNodeKind::CallSite, node, parent);
    if (!callee.is_null() && callee.type() != "identifier") {
      visit(callee, id, scope, Access::Read, false);
    }
    const std::uint32_t n = node.child_count();
    for (std::uint32_t i = 0; i < n; ++i) {
      if (node.field_name_for_child(i) == "function") continue;
      visit(node.child(i), id, scope, Access::Read, false);
    }
  }

  // Function-like nodes open a fresh scope: parameters are its first writes.
  void function(const SyntaxNode& node, std::size_t parent, Scope& outer) {
    Scope inner;
    const std::uint32_t n = node.child_count();
    for (std::uint32_t i = 0; i < n; ++i) {
      const SyntaxNode child = node.child(i);
      const std::string_view f = node.field_name_for_child(i);
      if (f == "name") {
        if (child.type() == "identifier") {
          identifier(child, parent, outer, Access::Declare);
        }
      } else if (f == "declarator") {
        declarator_of_function(child, parent, outer, inner);
      } else if (f == "parameters") {
        parameters(child, parent, inner);
      } else if (f == "body") {
        visit(child, parent, inner, Access::Read, false);
      } else {
        visit(child, parent, outer, Access::Read, false);
      }
    }
  }

  void declarator_of_function(const SyntaxNode& node, std::size_t parent, Scope& outer,
                              Scope& inner) {
    const std::string_view type = node.type();
    if (type == "function_declarator") {
      const SyntaxNode name = node.field("declarator");
      if (!name.is_null()) {
        if (name.type() == "identifier") {
          identifier(name, parent, outer, Access::Declare);
        } else {
          visit(name, parent, outer, Access::Declare, false);
        }
      }
      const SyntaxNode params = node.field("parameters");
      if (!params.is_null()) parameters(params, parent, inner);
      return;
    }
    const SyntaxNode next = node.field("declarator");
    if (!next.is_null()) declarator_of_function(next, parent, outer, inner);
  }

  void parameters(const SyntaxNode& node, std::size_t parent, Scope& scope) {
    const std::uint32_t n = node.child_count();
    for (std::uint32_t i = 0; i < n; ++i) {
      const SyntaxNode child = node.child(i);
      if (!child.is_named()) continue;
      const std::string_view type = child.type();
      if (type == "identifier") {
        identifier(child, parent, scope, Access::Write);
      } else if (type == "parameter_declaration" || type == "optional_parameter_declaration") {
        visit_field(child, "default_value", parent, scope, Access::Read);
        visit_field(child, "declarator", parent, scope, Access::Write);
      } else if (type == "default_parameter" || type == "typed_default_parameter") {
        visit_field(child, "value", parent, scope, Access::Read);
        visit_field(child, "name", parent, scope, Access::Write);
      } else if (type == "typed_parameter" || type == "list_splat_pattern" ||
                 type == "dictionary_splat_pattern") {
        for (std::uint32_t k = 0; k < child.named_child_count(); ++k) {
          const SyntaxNode inner = child.named_child(k);
          if (inner.type() == "identifier") identifier(inner, parent, scope, Access::Write);
        }
      } else {
        visit(child, parent, scope, Access::Read, false);
      }
    }
  }

  ProgramGraph graph_;
};

}  // namespace

std::string_view to_string(GraphNodeKind kind) {
  switch (kind) {
    case GraphNodeKind::Statement: return "Statement";
    case GraphNodeKind::Identifier: return "Identifier";
    case GraphNodeKind::CallSite: return "CallSite";
  }
  return "Statement";
}

std::string_view to_string(GraphEdgeKind kind) {
  switch (kind) {
    case GraphEdgeKind::AstChild: return "AstChild";
    case GraphEdgeKind::NextStatement: return "NextStatement";
    case GraphEdgeKind::DefUse: return "DefUse";
  }
  return "AstChild";
}

std::size_t ProgramGraph::count(GraphNodeKind kind) const {
  std::size_t n = 0;
  for (const auto& node : nodes) n += node.kind == kind;
  return n;
}

std::size_t ProgramGraph::count(GraphEdgeKind kind) const {
  std::size_t n = 0;
  for (const auto& e : edges) n += e.kind == kind;
  return n;
}

std::vector<GraphEdge> ProgramGraph::edges_of(GraphEdgeKind kind) const {
  std::vector<GraphEdge> out;
  for (const auto& e : edges) {
    if (e.kind == kind) out.push_back(e);
  }
  return out;
}

ProgramGraph build_program_graph(const SyntaxTree& tree) {
  return GraphBuilder().build(tree.root());
}

ProgramGraph build_program_graph(const CodeSnippet& snippet) {
  if (snippet.language() == Language::Unknown) {
    throw Error(ErrorCode::UnsupportedLanguage, "program graphs need a c, cpp or python snippet");
  }
  return build_program_graph(SyntaxTree::parse(snippet));
}

nlohmann::json to_json(const ProgramGraph& graph) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : graph.nodes) {
    nodes.push_back({{"id", n.id},
                     {"label", n.label},
                     {"kind", to_string(n.kind)},
                     {"s", {n.span.start, n.span.end}}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : graph.edges) {
    edges.push_back({{"src", e.src}, {"dst", e.dst}, {"kind", to_string(e.kind)}});
  }
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

}  // namespace hpcplp
