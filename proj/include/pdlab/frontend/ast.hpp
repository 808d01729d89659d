#pragma once

#include "pdlab/frontend/token.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pdlab {

using NodeId = int;
inline constexpr NodeId kNoNode = -1;

enum class NodeKind : int {
  Function,
  Param,
  Block,
  Decl,
  ExprStmt,
  If,
  While,
  For,
  Return,
  Break,
  Continue,
  Call,
  Assign,
  CompoundAssign,
  BinaryOp,
  UnaryOp,
  IdentifierRef,
  Literal,
  Index,
};

std::string_view to_string(NodeKind kind);

// Child layout per kind:
//   Function        [Param..., Block]            text = name, type = return type
//   Param           [IdentifierRef]              type; array_extent = "" for `int a[]`
//   Block           [stmt...]
//   Decl            [IdentifierRef, init?]       type; array_extent when declared as array
//   ExprStmt        [expr]
//   If              [cond, then, else?]
//   While           [cond, body]
//   For             [init, cond, update, body]   init is a Decl (no `;` in span) or an expr
//   Return          [expr?]
//   Call            [arg...]                     text = callee
//   Assign          [lvalue, rhs]                text = "="
//   CompoundAssign  [lvalue, rhs]                text = "+=" etc.
//   BinaryOp        [lhs, rhs]                   text = operator
//   UnaryOp         [operand]                    text = operator
//   IdentifierRef   []                           text = name
//   Literal         []                           text = literal spelling
//   Index           [base, index]
struct AstNode {
  NodeKind kind;
  Span span;
  std::vector<NodeId> children;
  std::string text;
  std::string type;
  std::optional<std::string> array_extent;
};

struct Ast {
  std::vector<AstNode> nodes;
  NodeId root = kNoNode;

  const AstNode& operator[](NodeId id) const { return nodes.at(static_cast<std::size_t>(id)); }
  AstNode& operator[](NodeId id) { return nodes.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return nodes.size(); }
};

/// Parses exactly one function definition of the supported C subset.
/// Throws ParseError or UnsupportedConstruct.
Ast parse(const std::vector<CodeToken>& tokens);

/// Shape equality that ignores byte spans: kinds, texts, types and child
/// structure must agree.
bool structurally_equal(const Ast& a, const Ast& b);

enum class PdgNodeKind : int { Statement = 0, Predicate = 1 };

struct PdgNodeSpan {
  int index = 0;
  PdgNodeKind kind = PdgNodeKind::Statement;
  Span span;
  NodeId ast_node = kNoNode;

  friend bool operator==(const PdgNodeSpan&, const PdgNodeSpan&) = default;
};

/// One node per simple statement and per branch condition; `for` headers
/// contribute init, condition and update nodes. Ordered by span start.
std::vector<PdgNodeSpan> segment_statements(const Ast& ast);

}  // namespace pdlab
