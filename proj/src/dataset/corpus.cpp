#include "pdlab/dataset/corpus.hpp"

#include "pdlab/common/error.hpp"
#include "pdlab/common/hash.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

namespace pdlab {

// --- pretty printer ---------------------------------------------------------

namespace {

int precedence(const AstNode& n) {
  switch (n.kind) {
    case NodeKind::BinaryOp:
      if (n.text == "||") return 1;
      if (n.text == "&&") return 2;
      if (n.text == "==" || n.text == "!=") return 3;
      if (n.text == "<" || n.text == ">" || n.text == "<=" || n.text == ">=") return 4;
      if (n.text == "+" || n.text == "-") return 5;
      return 6;
    case NodeKind::UnaryOp:
      return 7;
    case NodeKind::Assign:
    case NodeKind::CompoundAssign:
      return 0;
    default:
      return 8;
  }
}

class Printer {
 public:
  explicit Printer(const Ast& ast) : ast_(ast) {}

  std::string run() {
    const AstNode& fn = ast_[ast_.root];
    out_ += fn.type + " " + fn.text + "(";
    for (std::size_t i = 0; i + 1 < fn.children.size(); ++i) {
      if (i) out_ += ", ";
      const AstNode& p = ast_[fn.children[i]];
      out_ += p.type + " " + ast_[p.children[0]].text;
      if (p.array_extent) out_ += "[" + *p.array_extent + "]";
    }
    if (fn.children.size() == 1) out_ += "void";
    out_ += ") ";
    block(fn.children.back(), 0);
    out_ += "\n";
    return std::move(out_);
  }

 private:
  void indent(int depth) { out_.append(static_cast<std::size_t>(depth) * 4, ' '); }

  // Emits "{ ... }" with the opening brace on the current line.
  void block(NodeId id, int depth) {
    out_ += "{\n";
    for (NodeId c : ast_[id].children) statement(c, depth + 1);
    indent(depth);
    out_ += "}";
  }

  // Body of if/while/for after the header's ')'.
  void body(NodeId id, int depth) {
    if (ast_[id].kind == NodeKind::Block) {
      out_ += " ";
      block(id, depth);
      out_ += "\n";
    } else {
      out_ += "\n";
      statement(id, depth + 1);
    }
  }

  std::string decl_head(const AstNode& d) {
    std::string s = d.type + " " + ast_[d.children[0]].text;
    if (d.array_extent) s += "[" + *d.array_extent + "]";
    if (d.children.size() > 1) s += " = " + expr(d.children[1]);
    return s;
  }

  void statement(NodeId id, int depth) {
    const AstNode& n = ast_[id];
    indent(depth);
    switch (n.kind) {
      case NodeKind::Block:
        block(id, depth);
        out_ += "\n";
        break;
      case NodeKind::Decl:
        out_ += decl_head(n) + ";\n";
        break;
      case NodeKind::ExprStmt:
        out_ += expr(n.children[0]) + ";\n";
        break;
      case NodeKind::Return:
        out_ += n.children.empty() ? "return;\n" : "return " + expr(n.children[0]) + ";\n";
        break;
      case NodeKind::Break:
        out_ += "break;\n";
        break;
      case NodeKind::Continue:
        out_ += "continue;\n";
        break;
      case NodeKind::If:
        if_chain(id, depth);
        break;
      case NodeKind::While:
        out_ += "while (" + expr(n.children[0]) + ")";
        body(n.children[1], depth);
        break;
      case NodeKind::For: {
        const AstNode& init = ast_[n.children[0]];
        std::string head = init.kind == NodeKind::Decl ? decl_head(init) : expr(n.children[0]);
        out_ += "for (" + head + "; " + expr(n.children[1]) + "; " + expr(n.children[2]) + ")";
        body(n.children[3], depth);
        break;
      }
      default:
        out_ += expr(id) + ";\n";
        break;
    }
  }

  void if_chain(NodeId id, int depth) {
    const AstNode& n = ast_[id];
    out_ += "if (" + expr(n.children[0]) + ")";
    const bool braced = ast_[n.children[1]].kind == NodeKind::Block;
    if (n.children.size() < 3) {
      body(n.children[1], depth);
      return;
    }
    const NodeId other = n.children[2];
    const bool other_braced = ast_[other].kind == NodeKind::Block;
    const bool other_if = ast_[other].kind == NodeKind::If;
    if (braced) {
      out_ += " ";
      block(n.children[1], depth);
      out_ += " else";
    } else {
      out_ += "\n";
      statement(n.children[1], depth + 1);
      indent(depth);
      out_ += "else";
    }
    if (other_if) {
      out_ += " ";
      if_chain(other, depth);
    } else if (other_braced) {
      out_ += " ";
      block(other, depth);
      out_ += "\n";
    } else {
      out_ += "\n";
      statement(other, depth + 1);
    }
  }

  std::string wrap(NodeId id, bool parens) {
    std::string s = expr(id);
    return parens ? "(" + s + ")" : s;
  }

  std::string expr(NodeId id) {
    const AstNode& n = ast_[id];
    switch (n.kind) {
      case NodeKind::IdentifierRef:
      case NodeKind::Literal:
        return n.text;
      case NodeKind::Call: {
        std::string s = n.text + "(";
        for (std::size_t i = 0; i < n.children.size(); ++i) {
          if (i) s += ", ";
          s += expr(n.children[i]);
        }
        return s + ")";
      }
      case NodeKind::Index: {
        const AstNode& base = ast_[n.children[0]];
        bool parens = base.kind != NodeKind::IdentifierRef && base.kind != NodeKind::Index;
        return wrap(n.children[0], parens) + "[" + expr(n.children[1]) + "]";
      }
      case NodeKind::Assign:
      case NodeKind::CompoundAssign:
        return expr(n.children[0]) + " " + n.text + " " + expr(n.children[1]);
      case NodeKind::UnaryOp: {
        std::string operand = wrap(n.children[0], precedence(ast_[n.children[0]]) < 7);
        std::string sep = (!operand.empty() && (operand[0] == '-' || operand[0] == '+') &&
                           (n.text == "-" || n.text == "--" || n.text == "++"))
                              ? " "
                              : "";
        return n.text + sep + operand;
      }
      case NodeKind::BinaryOp: {
        int p = precedence(n);
        std::string l = wrap(n.children[0], precedence(ast_[n.children[0]]) < p);
        std::string r = wrap(n.children[1], precedence(ast_[n.children[1]]) <= p);
        return l + " " + n.text + " " + r;
      }
      default:
        return "";
    }
  }

  const Ast& ast_;
  std::string out_;
};

}  // namespace

std::string pretty_print(const Ast& ast) { return Printer(ast).run(); }

// --- generator --------------------------------------------------------------

namespace {

constexpr std::array<std::string_view, 32> kVariableNames = {
    "count",   "total",   "idx",     "limit",   "temp_flag", "flag",    "buf_len", "offset",
    "value",   "result",  "sum",     "step",    "size",      "pos",     "left",    "right",
    "acc",     "delta",   "max_val", "min_val", "len",       "key",     "cur",     "prev",
    "next_val", "width",  "height",  "score",   "ret",       "tmp",     "level",   "mode"};
constexpr std::array<std::string_view, 4> kArrayNames = {"buf", "data", "table", "items"};
constexpr std::array<std::string_view, 10> kFunctionNames = {
    "process", "compute", "update_state", "check_bounds", "handle_input",
    "parse_item", "scan_table", "merge_runs", "find_key", "encode_block"};
constexpr std::array<std::string_view, 8> kCallees = {
    "log_value", "compute_hash", "read_input", "clamp", "emit", "get_next", "validate", "abs_val"};
constexpr std::array<std::string_view, 4> kMessages = {"\"done\"", "\"error: %d\"", "\"ok\"",
                                                       "\"value=%d\\n\""};

template <typename T, std::size_t N>
std::string pick(Rng& rng, const std::array<T, N>& set) {
  return std::string(set[rng.below(N)]);
}

class Generator {
 public:
  Generator(Rng& rng, const GeneratorProfile& profile) : rng_(rng), p_(profile) {}

  Ast run() {
    budget_ = rng_.between(p_.min_statements, p_.max_statements);
    choose_variables();
    std::vector<NodeId> stmts;
    std::vector<std::string> pending;
    pending.swap(locals_);
    if (!arrays_.empty() && budget_ > 2) {
      NodeId d = add(NodeKind::Decl, {ident(arrays_[0])});
      ast_[d].type = "int";
      ast_[d].array_extent = std::to_string(8 << rng_.below(3));
      stmts.push_back(d);
      --budget_;
      array_live_ = true;
    }
    // Locals are declared up front, leaving room for one body statement and
    // the return. A name becomes visible once its declaration is complete.
    for (const std::string& v : pending) {
      if (budget_ <= 2) break;
      stmts.push_back(declaration(v));
      --budget_;
      vars_.push_back(v);
      locals_.push_back(v);
    }
    while (budget_ > 1) stmts.push_back(statement(0, false));
    stmts.push_back(add(NodeKind::Return, {expression(1)}));

    std::vector<NodeId> fn_children;
    for (const std::string& p : params_) {
      NodeId param = add(NodeKind::Param, {ident(p)});
      ast_[param].type = "int";
      fn_children.push_back(param);
    }
    fn_children.push_back(add(NodeKind::Block, std::move(stmts)));
    ast_.root = add(NodeKind::Function, std::move(fn_children), pick(rng_, kFunctionNames));
    ast_[ast_.root].type = "int";
    return std::move(ast_);
  }

 private:
  void choose_variables() {
    std::vector<std::string> pool(kVariableNames.begin(), kVariableNames.end());
    for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng_.below(i)]);
    const int n = rng_.between(p_.min_variables, p_.max_variables);
    const int n_params = rng_.between(1, std::min(3, n - 1));
    params_.assign(pool.begin(), pool.begin() + n_params);
    locals_.assign(pool.begin() + n_params, pool.begin() + n);
    vars_ = params_;
    if (rng_.chance(0.3)) arrays_.push_back(pick(rng_, kArrayNames));
  }

  NodeId add(NodeKind kind, std::vector<NodeId> children = {}, std::string text = {}) {
    ast_.nodes.push_back(AstNode{kind, Span{}, std::move(children), std::move(text), {}, {}});
    return static_cast<NodeId>(ast_.nodes.size() - 1);
  }

  NodeId ident(const std::string& name) { return add(NodeKind::IdentifierRef, {}, name); }
  NodeId literal() { return add(NodeKind::Literal, {}, std::to_string(rng_.below(rng_.chance(0.5) ? 10 : 100))); }
  std::string var() { return vars_[rng_.below(vars_.size())]; }
  std::string local() { return locals_.empty() ? var() : locals_[rng_.below(locals_.size())]; }
  bool has_array() const { return array_live_; }

  NodeId declaration(const std::string& name) {
    std::vector<NodeId> children{ident(name)};
    if (rng_.chance(0.75)) children.push_back(expression(1));
    NodeId d = add(NodeKind::Decl, std::move(children));
    ast_[d].type = "int";
    return d;
  }

  NodeId operand() {
    double r = rng_.uniform();
    if (r < 0.68) return ident(var());
    if (r < 0.9 || !has_array()) return literal();
    return add(NodeKind::Index, {ident(arrays_[0]), ident(var())});
  }

  NodeId expression(int depth) {
    if (depth >= 2 || rng_.chance(0.45)) return operand();
    if (rng_.chance(0.08)) {
      std::vector<NodeId> args{operand()};
      if (rng_.chance(0.5)) args.push_back(operand());
      return add(NodeKind::Call, std::move(args), pick(rng_, kCallees));
    }
    static constexpr std::array<std::string_view, 5> ops = {"+", "-", "*", "/", "%"};
    std::string op(ops[rng_.below(rng_.chance(0.7) ? 2 : 5)]);
    return add(NodeKind::BinaryOp, {expression(depth + 1), expression(depth + 1)}, op);
  }

  NodeId condition() {
    static constexpr std::array<std::string_view, 6> rel = {"<", ">", "<=", ">=", "==", "!="};
    auto comparison = [&] {
      return add(NodeKind::BinaryOp, {ident(var()), expression(1)}, pick(rng_, rel));
    };
    double r = rng_.uniform();
    if (r < 0.8) return comparison();
    if (r < 0.9) return add(NodeKind::BinaryOp, {comparison(), comparison()}, rng_.chance(0.5) ? "&&" : "||");
    return add(NodeKind::UnaryOp, {ident(var())}, "!");
  }

  NodeId lvalue() {
    if (has_array() && rng_.chance(0.12)) return add(NodeKind::Index, {ident(arrays_[0]), ident(var())});
    return ident(local());
  }

  NodeId simple_expression() {
    double r = rng_.uniform();
    if (r < 0.45) return add(NodeKind::Assign, {lvalue(), expression(0)}, "=");
    if (r < 0.62) {
      static constexpr std::array<std::string_view, 4> ops = {"+=", "-=", "*=", "/="};
      return add(NodeKind::CompoundAssign, {ident(local()), expression(1)}, pick(rng_, ops));
    }
    if (r < 0.72) return add(NodeKind::UnaryOp, {ident(local())}, rng_.chance(0.7) ? "++" : "--");
    if (r < 0.84) {
      std::vector<NodeId> args{operand()};
      if (rng_.chance(0.5)) args.push_back(operand());
      return add(NodeKind::Assign, {ident(local()), add(NodeKind::Call, std::move(args), pick(rng_, kCallees))}, "=");
    }
    std::vector<NodeId> args;
    if (rng_.chance(0.25)) args.push_back(add(NodeKind::Literal, {}, pick(rng_, kMessages)));
    args.push_back(ident(var()));
    if (rng_.chance(0.4)) args.push_back(operand());
    return add(NodeKind::Call, std::move(args), pick(rng_, kCallees));
  }

  NodeId simple_statement() {
    --budget_;
    return add(NodeKind::ExprStmt, {simple_expression()});
  }

  // A block of at least one statement drawing at most `share` nodes.
  NodeId body(int depth, bool in_loop, int share) {
    const int stop = budget_ - share;
    std::vector<NodeId> stmts;
    do {
      stmts.push_back(statement(depth, in_loop, budget_ - stop));
    } while (budget_ > stop && budget_ > 1);
    if (in_loop && depth < p_.max_depth && budget_ > 2 && rng_.chance(0.12)) {
      // Guarded early exit as the last statement of the loop body.
      NodeId cond = condition();
      budget_ -= 2;
      NodeId jump = add(rng_.chance(0.6) ? NodeKind::Break : NodeKind::Continue);
      stmts.push_back(add(NodeKind::If, {cond, add(NodeKind::Block, {jump})}));
    }
    return add(NodeKind::Block, std::move(stmts));
  }

  int share_for_body() { return rng_.between(1, std::max(1, std::min(budget_ - 1, 7))); }

  NodeId statement(int depth, bool in_loop, int room = 1 << 30) {
    const bool can_nest = depth < p_.max_depth && budget_ >= 3 && room >= 2;
    double r = rng_.uniform();
    if (!can_nest || r < 0.55) return simple_statement();
    if (r < 0.75) {
      --budget_;
      NodeId cond = condition();
      NodeId then_block = body(depth + 1, in_loop, share_for_body());
      if (budget_ > 2 && rng_.chance(0.35)) {
        NodeId else_block = body(depth + 1, in_loop, share_for_body());
        return add(NodeKind::If, {cond, then_block, else_block});
      }
      return add(NodeKind::If, {cond, then_block});
    }
    if (r < 0.88 || budget_ < 5 || room < 4) {
      --budget_;
      NodeId cond = condition();
      return add(NodeKind::While, {cond, body(depth + 1, true, share_for_body())});
    }
    budget_ -= 3;
    std::string v = local();
    NodeId init = add(NodeKind::Assign, {ident(v), literal()}, "=");
    static constexpr std::array<std::string_view, 3> rel = {"<", "<=", "!="};
    NodeId cond = add(NodeKind::BinaryOp, {ident(v), expression(1)}, pick(rng_, rel));
    NodeId update;
    double u = rng_.uniform();
    if (u < 0.4)
      update = add(NodeKind::Assign, {ident(v), add(NodeKind::BinaryOp, {ident(v), literal()}, "+")}, "=");
    else if (u < 0.7)
      update = add(NodeKind::UnaryOp, {ident(v)}, "++");
    else
      update = add(NodeKind::CompoundAssign, {ident(v), literal()}, "+=");
    return add(NodeKind::For, {init, cond, update, body(depth + 1, true, share_for_body())});
  }

  Rng& rng_;
  const GeneratorProfile& p_;
  Ast ast_;
  int budget_ = 0;
  bool array_live_ = false;
  std::vector<std::string> vars_, params_, locals_, arrays_;
};

}  // namespace

std::vector<std::string> gen_synthetic_corpus(std::uint64_t seed, std::size_t n_functions,
                                              const GeneratorProfile& profile) {
  if (profile.min_statements < 3 || profile.max_statements < profile.min_statements ||
      profile.min_variables < 2 || profile.max_variables < profile.min_variables ||
      profile.max_variables > static_cast<int>(kVariableNames.size()))
    throw ConfigError("invalid generator profile");
  Rng rng(seed);
  std::vector<std::string> out;
  out.reserve(n_functions);
  for (std::size_t i = 0; i < n_functions; ++i) out.push_back(pretty_print(Generator(rng, profile).run()));
  return out;
}

// --- dedup and split --------------------------------------------------------

std::string normalize_whitespace(std::string_view source) {
  std::string out;
  bool pending_space = false;
  for (char c : source) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

std::string content_hash(std::string_view source) { return sha256_hex(normalize_whitespace(source)); }

CorpusSplit dedup_and_split(const std::vector<std::string>& corpus,
                            const std::array<double, 3>& ratios, std::uint64_t seed) {
  if (std::any_of(ratios.begin(), ratios.end(), [](double r) { return r < 0; }) ||
      std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9)
    throw ConfigError("split ratios must be nonnegative and sum to 1");
  CorpusSplit split;
  std::vector<std::size_t> unique;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (split.registry.emplace(content_hash(corpus[i]), i).second) unique.push_back(i);
  if (unique.size() < corpus.size())
    spdlog::info("dedup: dropped {} duplicate functions", corpus.size() - unique.size());

  Rng rng(seed);
  for (std::size_t i = unique.size(); i > 1; --i) std::swap(unique[i - 1], unique[rng.below(i)]);
  const std::size_t n = unique.size();
  std::size_t n_train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n)));
  std::size_t n_valid = static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n)));
  n_train = std::min(n_train, n);
  n_valid = std::min(n_valid, n - n_train);
  split.train.assign(unique.begin(), unique.begin() + static_cast<long>(n_train));
  split.valid.assign(unique.begin() + static_cast<long>(n_train),
                     unique.begin() + static_cast<long>(n_train + n_valid));
  split.test.assign(unique.begin() + static_cast<long>(n_train + n_valid), unique.end());
  if (split.valid.empty() || split.test.empty())
    spdlog::warn("dedup_and_split: {} unique functions leave valid={} test={}", n, split.valid.size(),
                 split.test.size());
  return split;
}

}  // namespace pdlab
