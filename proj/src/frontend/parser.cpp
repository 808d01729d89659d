#include "pdlab/common/error.hpp"
#include "pdlab/frontend/ast.hpp"

#include <algorithm>
#include <array>
#include <functional>

namespace pdlab {

namespace {

constexpr std::array<std::string_view, 3> kTypeKeywords = {"int", "char", "void"};
constexpr std::array<std::string_view, 16> kUnsupportedKeywords = {
    "goto",   "switch", "case",    "default", "do",     "unsigned", "signed", "long",
    "short",  "float",  "double",  "struct",  "union",  "enum",     "typedef", "sizeof"};
constexpr std::array<std::string_view, 6> kUnsupportedQualifiers = {
    "const", "static", "extern", "register", "volatile", "auto"};

template <std::size_t N>
bool one_of(std::string_view s, const std::array<std::string_view, N>& set) {
  return std::find(set.begin(), set.end(), s) != set.end();
}

int binary_precedence(std::string_view op) {
  if (op == "||") return 1;
  if (op == "&&") return 2;
  if (op == "==" || op == "!=") return 3;
  if (op == "<" || op == ">" || op == "<=" || op == ">=") return 4;
  if (op == "+" || op == "-") return 5;
  if (op == "*" || op == "/" || op == "%") return 6;
  return 0;
}

bool is_unsupported_binary(std::string_view op) {
  return op == "&" || op == "|" || op == "^" || op == "<<" || op == ">>" || op == "?" ||
         op == "->" || op == "." || op == ",";
}

bool is_compound_assign(std::string_view op) {
  return op == "+=" || op == "-=" || op == "*=" || op == "/=";
}

bool is_unsupported_assign(std::string_view op) {
  return op == "%=" || op == "&=" || op == "|=" || op == "^=" || op == "<<=" || op == ">>=";
}

struct Expr {
  NodeId id;
  Span extent;  // includes enclosing parentheses, unlike the node span
};

class Parser {
 public:
  explicit Parser(const std::vector<CodeToken>& tokens) : toks_(tokens) {}

  Ast run() {
    ast_.root = function();
    if (!at_end()) fail({"end of input"});
    return std::move(ast_);
  }

 private:
  // --- token helpers -------------------------------------------------------

  bool at_end() const { return pos_ >= toks_.size(); }

  std::size_t here() const {
    if (!at_end()) return toks_[pos_].span.begin;
    return toks_.empty() ? 0 : toks_.back().span.end;
  }

  const CodeToken* peek(std::size_t ahead = 0) const {
    return pos_ + ahead < toks_.size() ? &toks_[pos_ + ahead] : nullptr;
  }

  bool check(std::string_view text, std::size_t ahead = 0) const {
    const CodeToken* t = peek(ahead);
    return t && t->kind != TokenKind::StringLiteral && t->kind != TokenKind::CharLiteral &&
           t->text == text;
  }

  bool check_kind(TokenKind kind) const {
    const CodeToken* t = peek();
    return t && t->kind == kind;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    throw ParseError(here(), std::move(expected));
  }

  [[noreturn]] void unsupported(const std::string& what) const {
    throw UnsupportedConstruct(here(), what);
  }

  const CodeToken& expect(std::string_view text) {
    if (!check(text)) fail({std::string(text)});
    return toks_[pos_++];
  }

  const CodeToken& expect_identifier() {
    if (!check_kind(TokenKind::Identifier)) {
      reject_unsupported_keyword();
      fail({"identifier"});
    }
    return toks_[pos_++];
  }

  void reject_unsupported_keyword() const {
    const CodeToken* t = peek();
    if (!t || t->kind != TokenKind::Keyword) return;
    if (one_of(t->text, kUnsupportedKeywords) || one_of(t->text, kUnsupportedQualifiers))
      unsupported("'" + t->text + "'");
  }

  bool at_type() const {
    const CodeToken* t = peek();
    return t && t->kind == TokenKind::Keyword && one_of(t->text, kTypeKeywords);
  }

  std::size_t prev_end() const { return toks_[pos_ - 1].span.end; }

  NodeId add(NodeKind kind, Span span, std::vector<NodeId> children = {},
             std::string text = {}) {
    ast_.nodes.push_back(AstNode{kind, span, std::move(children), std::move(text), {}, {}});
    return static_cast<NodeId>(ast_.nodes.size() - 1);
  }

  NodeId identifier_ref(const CodeToken& tok) {
    return add(NodeKind::IdentifierRef, tok.span, {}, tok.text);
  }

  // --- declarations ---------------------------------------------------------

  std::string type_name() {
    reject_unsupported_keyword();
    if (!at_type()) fail({"int", "char", "void"});
    std::string t = toks_[pos_++].text;
    if (check("*")) unsupported("pointer declarator");
    return t;
  }

  NodeId function() {
    const std::size_t begin = here();
    std::string ret = type_name();
    const CodeToken& name = expect_identifier();
    expect("(");
    std::vector<NodeId> children;
    if (check("void") && check(")", 1)) {
      ++pos_;
    } else if (!check(")")) {
      while (true) {
        children.push_back(param());
        if (check(",")) {
          ++pos_;
          continue;
        }
        break;
      }
    }
    expect(")");
    children.push_back(block());
    NodeId id = add(NodeKind::Function, Span{begin, prev_end()}, std::move(children), name.text);
    ast_[id].type = std::move(ret);
    return id;
  }

  NodeId param() {
    const std::size_t begin = here();
    std::string type = type_name();
    NodeId ref = identifier_ref(expect_identifier());
    std::optional<std::string> extent;
    if (check("[")) {
      ++pos_;
      extent = check_kind(TokenKind::IntLiteral) ? toks_[pos_++].text : std::string();
      expect("]");
    }
    NodeId id = add(NodeKind::Param, Span{begin, prev_end()}, {ref});
    ast_[id].type = std::move(type);
    ast_[id].array_extent = std::move(extent);
    return id;
  }

  // Declaration without the trailing ';'.
  NodeId declaration_head() {
    const std::size_t begin = here();
    std::string type = type_name();
    NodeId ref = identifier_ref(expect_identifier());
    std::optional<std::string> extent;
    if (check("[")) {
      ++pos_;
      if (!check_kind(TokenKind::IntLiteral)) fail({"integer literal"});
      extent = toks_[pos_++].text;
      expect("]");
    }
    std::vector<NodeId> children{ref};
    if (check("=")) {
      ++pos_;
      if (check("{")) unsupported("initializer list");
      children.push_back(expression().id);
    }
    if (check(",")) unsupported("multiple declarators");
    NodeId id = add(NodeKind::Decl, Span{begin, prev_end()}, std::move(children));
    ast_[id].type = std::move(type);
    ast_[id].array_extent = std::move(extent);
    return id;
  }

  // --- statements -----------------------------------------------------------

  NodeId block() {
    const std::size_t begin = here();
    expect("{");
    std::vector<NodeId> stmts;
    while (!check("}")) {
      if (at_end()) fail({"}"});
      stmts.push_back(statement());
    }
    ++pos_;
    return add(NodeKind::Block, Span{begin, prev_end()}, std::move(stmts));
  }

  NodeId statement() {
    reject_unsupported_keyword();
    const std::size_t begin = here();
    if (check("{")) return block();
    if (at_type()) {
      NodeId decl = declaration_head();
      expect(";");
      ast_[decl].span.end = prev_end();
      return decl;
    }
    if (check("if")) return if_statement();
    if (check("while")) return while_statement();
    if (check("for")) return for_statement();
    if (check("return")) {
      ++pos_;
      std::vector<NodeId> children;
      if (!check(";")) children.push_back(expression().id);
      expect(";");
      return add(NodeKind::Return, Span{begin, prev_end()}, std::move(children));
    }
    if (check("break") || check("continue")) {
      NodeKind kind = check("break") ? NodeKind::Break : NodeKind::Continue;
      if (loop_depth_ == 0) throw ParseError(begin, {"enclosing loop"});
      ++pos_;
      expect(";");
      return add(kind, Span{begin, prev_end()});
    }
    if (check(";")) fail({"statement"});
    NodeId expr = simple_statement();
    expect(";");
    return add(NodeKind::ExprStmt, Span{begin, prev_end()}, {expr});
  }

  NodeId condition() {
    expect("(");
    NodeId cond = expression().id;
    expect(")");
    return cond;
  }

  NodeId if_statement() {
    const std::size_t begin = here();
    ++pos_;
    NodeId cond = condition();
    std::vector<NodeId> children{cond, statement()};
    if (check("else")) {
      ++pos_;
      children.push_back(statement());
    }
    return add(NodeKind::If, Span{begin, prev_end()}, std::move(children));
  }

  NodeId while_statement() {
    const std::size_t begin = here();
    ++pos_;
    NodeId cond = condition();
    ++loop_depth_;
    NodeId body = statement();
    --loop_depth_;
    return add(NodeKind::While, Span{begin, prev_end()}, {cond, body});
  }

  NodeId for_statement() {
    const std::size_t begin = here();
    ++pos_;
    expect("(");
    NodeId init = at_type() ? declaration_head() : simple_statement();
    expect(";");
    if (check(";")) unsupported("for loop without condition");
    NodeId cond = expression().id;
    expect(";");
    if (check(")")) unsupported("for loop without update");
    NodeId update = simple_statement();
    expect(")");
    ++loop_depth_;
    NodeId body = statement();
    --loop_depth_;
    return add(NodeKind::For, Span{begin, prev_end()}, {init, cond, update, body});
  }

  // Assignment, compound assignment or a bare expression.
  NodeId simple_statement() {
    Expr lhs = expression();
    const CodeToken* t = peek();
    if (!t || t->kind != TokenKind::Operator) return lhs.id;
    if (is_unsupported_assign(t->text)) unsupported("'" + t->text + "'");
    if (t->text != "=" && !is_compound_assign(t->text)) return lhs.id;
    require_lvalue(lhs.id, lhs.extent.begin);
    std::string op = toks_[pos_++].text;
    Expr rhs = expression();
    NodeKind kind = op == "=" ? NodeKind::Assign : NodeKind::CompoundAssign;
    return add(kind, Span{lhs.extent.begin, rhs.extent.end}, {lhs.id, rhs.id}, op);
  }

  void require_lvalue(NodeId id, std::size_t at) const {
    NodeKind k = ast_[id].kind;
    if (k != NodeKind::IdentifierRef && k != NodeKind::Index)
      throw ParseError(at, {"lvalue"});
  }

  // --- expressions ----------------------------------------------------------

  Expr expression() { return binary(1); }

  Expr binary(int min_prec) {
    Expr lhs = unary();
    while (true) {
      const CodeToken* t = peek();
      if (!t || t->kind != TokenKind::Operator) break;
      if (is_unsupported_binary(t->text)) unsupported("operator '" + t->text + "'");
      int prec = binary_precedence(t->text);
      if (prec == 0 || prec < min_prec) break;
      std::string op = toks_[pos_++].text;
      Expr rhs = binary(prec + 1);
      Span span{lhs.extent.begin, rhs.extent.end};
      lhs = Expr{add(NodeKind::BinaryOp, span, {lhs.id, rhs.id}, op), span};
    }
    return lhs;
  }

  Expr unary() {
    const CodeToken* t = peek();
    if (t && t->kind == TokenKind::Operator) {
      const std::string& op = t->text;
      if (op == "-" || op == "!" || op == "++" || op == "--") {
        const std::size_t begin = here();
        ++pos_;
        Expr operand = unary();
        if (op == "++" || op == "--") require_lvalue(operand.id, operand.extent.begin);
        Span span{begin, operand.extent.end};
        return Expr{add(NodeKind::UnaryOp, span, {operand.id}, op), span};
      }
      if (op == "*" || op == "&") unsupported("pointer operator '" + op + "'");
      if (op == "+" || op == "~") unsupported("unary '" + op + "'");
    }
    return postfix();
  }

  Expr postfix() {
    Expr e = primary();
    while (true) {
      if (check("[")) {
        ++pos_;
        Expr index = expression();
        expect("]");
        Span span{e.extent.begin, prev_end()};
        e = Expr{add(NodeKind::Index, span, {e.id, index.id}), span};
      } else if (check("++") || check("--")) {
        unsupported("postfix '" + toks_[pos_].text + "'");
      } else if (check("(")) {
        unsupported("call through expression");
      } else {
        return e;
      }
    }
  }

  Expr primary() {
    const CodeToken* t = peek();
    if (!t) fail({"expression"});
    const std::size_t begin = here();
    switch (t->kind) {
      case TokenKind::Identifier: {
        const CodeToken& name = toks_[pos_++];
        if (!check("(")) {
          NodeId id = identifier_ref(name);
          return Expr{id, name.span};
        }
        ++pos_;
        std::vector<NodeId> args;
        if (!check(")")) {
          while (true) {
            args.push_back(expression().id);
            if (!check(",")) break;
            ++pos_;
          }
        }
        expect(")");
        Span span{begin, prev_end()};
        return Expr{add(NodeKind::Call, span, std::move(args), name.text), span};
      }
      case TokenKind::IntLiteral:
      case TokenKind::CharLiteral:
      case TokenKind::StringLiteral: {
        const CodeToken& lit = toks_[pos_++];
        return Expr{add(NodeKind::Literal, lit.span, {}, lit.text), lit.span};
      }
      case TokenKind::Punctuation:
        if (t->text == "(") {
          ++pos_;
          if (at_type()) unsupported("cast");
          Expr inner = expression();
          expect(")");
          return Expr{inner.id, Span{begin, prev_end()}};
        }
        break;
      case TokenKind::Keyword:
        reject_unsupported_keyword();
        break;
      default:
        break;
    }
    fail({"expression"});
  }

  const std::vector<CodeToken>& toks_;
  std::size_t pos_ = 0;
  int loop_depth_ = 0;
  Ast ast_;
};

void collect_segments(const Ast& ast, NodeId id, std::vector<PdgNodeSpan>& out) {
  const AstNode& n = ast[id];
  auto push = [&](PdgNodeKind kind, NodeId node) {
    out.push_back(PdgNodeSpan{0, kind, ast[node].span, node});
  };
  switch (n.kind) {
    case NodeKind::Function:
      collect_segments(ast, n.children.back(), out);
      break;
    case NodeKind::Block:
      for (NodeId c : n.children) collect_segments(ast, c, out);
      break;
    case NodeKind::Decl:
    case NodeKind::ExprStmt:
    case NodeKind::Return:
    case NodeKind::Break:
    case NodeKind::Continue:
      push(PdgNodeKind::Statement, id);
      break;
    case NodeKind::If:
      push(PdgNodeKind::Predicate, n.children[0]);
      for (std::size_t i = 1; i < n.children.size(); ++i) collect_segments(ast, n.children[i], out);
      break;
    case NodeKind::While:
      push(PdgNodeKind::Predicate, n.children[0]);
      collect_segments(ast, n.children[1], out);
      break;
    case NodeKind::For:
      push(PdgNodeKind::Statement, n.children[0]);
      push(PdgNodeKind::Predicate, n.children[1]);
      push(PdgNodeKind::Statement, n.children[2]);
      collect_segments(ast, n.children[3], out);
      break;
    default:
      break;
  }
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Function: return "Function";
    case NodeKind::Param: return "Param";
    case NodeKind::Block: return "Block";
    case NodeKind::Decl: return "Decl";
    case NodeKind::ExprStmt: return "ExprStmt";
    case NodeKind::If: return "If";
    case NodeKind::While: return "While";
    case NodeKind::For: return "For";
    case NodeKind::Return: return "Return";
    case NodeKind::Break: return "Break";
    case NodeKind::Continue: return "Continue";
    case NodeKind::Call: return "Call";
    case NodeKind::Assign: return "Assign";
    case NodeKind::CompoundAssign: return "CompoundAssign";
    case NodeKind::BinaryOp: return "BinaryOp";
    case NodeKind::UnaryOp: return "UnaryOp";
    case NodeKind::IdentifierRef: return "IdentifierRef";
    case NodeKind::Literal: return "Literal";
    case NodeKind::Index: return "Index";
  }
  return "?";
}

Ast parse(const std::vector<CodeToken>& tokens) { return Parser(tokens).run(); }

bool structurally_equal(const Ast& a, const Ast& b) {
  std::function<bool(NodeId, NodeId)> eq = [&](NodeId x, NodeId y) {
    const AstNode& p = a[x];
    const AstNode& q = b[y];
    if (p.kind != q.kind || p.text != q.text || p.type != q.type ||
        p.array_extent != q.array_extent || p.children.size() != q.children.size())
      return false;
    for (std::size_t i = 0; i < p.children.size(); ++i)
      if (!eq(p.children[i], q.children[i])) return false;
    return true;
  };
  if (a.root == kNoNode || b.root == kNoNode) return a.root == b.root;
  return eq(a.root, b.root);
}

std::vector<PdgNodeSpan> segment_statements(const Ast& ast) {
  std::vector<PdgNodeSpan> out;
  if (ast.root == kNoNode) return out;
  collect_segments(ast, ast.root, out);
  std::stable_sort(out.begin(), out.end(),
                   [](const PdgNodeSpan& x, const PdgNodeSpan& y) { return x.span.begin < y.span.begin; });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].index = static_cast<int>(i);
  return out;
}

}  // namespace pdlab
