#include "pdlab/analysis/dependence.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

namespace pdlab {

ControlDeps control_dependencies(const Cfg& cfg, const std::vector<int>& ipdom) {
  std::set<ControlPair> pairs;
  const int entry = cfg.entry();
  const int exit = cfg.exit();
  for (const CfgEdge& e : cfg.edges()) {
    if (e.from == entry || e.from == exit) continue;
    const int stop = ipdom[static_cast<std::size_t>(e.from)];
    // Walk the post-dominator tree from the branch target up to (excluding)
    // the branch's own immediate post-dominator.
    for (int runner = e.to; runner != stop && runner >= 0 && runner != exit;
         runner = ipdom[static_cast<std::size_t>(runner)]) {
      if (runner == entry) break;
      pairs.emplace(e.from, runner);
    }
  }
  return ControlDeps{{pairs.begin(), pairs.end()}};
}

namespace {

class DefUseCollector {
 public:
  DefUseCollector(const Ast& ast, StatementDefUse& out) : ast_(ast), out_(out) {}

  void statement_root(NodeId id) {
    const AstNode& n = ast_[id];
    switch (n.kind) {
      case NodeKind::Decl: {
        const AstNode& name = ast_[n.children[0]];
        define(n.children[0], name.text, true);
        if (n.children.size() > 1) expr(n.children[1]);
        break;
      }
      case NodeKind::ExprStmt:
      case NodeKind::Return:
        for (NodeId c : n.children) expr(c);
        break;
      case NodeKind::Break:
      case NodeKind::Continue:
        break;
      default:
        expr(id);  // predicate or for-header expression
        break;
    }
  }

 private:
  void define(NodeId ref, const std::string& var, bool killing) {
    out_.defs.push_back(Occurrence{var, ref, killing});
  }
  void use(NodeId ref, const std::string& var) { out_.uses.push_back(Occurrence{var, ref, true}); }

  // Stores through `lhs`. Index chains define their base array without
  // killing it and use every index expression.
  void store(NodeId lhs, bool also_use) {
    const AstNode& n = ast_[lhs];
    if (n.kind == NodeKind::IdentifierRef) {
      if (also_use) use(lhs, n.text);
      define(lhs, n.text, true);
      return;
    }
    NodeId base = lhs;
    std::vector<NodeId> indices;
    while (ast_[base].kind == NodeKind::Index) {
      indices.push_back(ast_[base].children[1]);
      base = ast_[base].children[0];
    }
    for (auto it = indices.rbegin(); it != indices.rend(); ++it) expr(*it);
    const AstNode& root = ast_[base];
    if (root.kind != NodeKind::IdentifierRef) {
      expr(base);
      return;
    }
    if (also_use) use(base, root.text);
    define(base, root.text, false);
  }

  void expr(NodeId id) {
    const AstNode& n = ast_[id];
    switch (n.kind) {
      case NodeKind::IdentifierRef:
        use(id, n.text);
        break;
      case NodeKind::Assign:
        store(n.children[0], false);
        expr(n.children[1]);
        break;
      case NodeKind::CompoundAssign:
        store(n.children[0], true);
        expr(n.children[1]);
        break;
      case NodeKind::UnaryOp:
        if (n.text == "++" || n.text == "--")
          store(n.children[0], true);
        else
          expr(n.children[0]);
        break;
      default:
        for (NodeId c : n.children) expr(c);
        break;
    }
  }

  const Ast& ast_;
  StatementDefUse& out_;
};

}  // namespace

std::vector<StatementDefUse> def_use_sets(const Ast& ast, const std::vector<PdgNodeSpan>& nodes) {
  std::vector<StatementDefUse> result(nodes.size());
  for (const PdgNodeSpan& node : nodes) {
    StatementDefUse& du = result[static_cast<std::size_t>(node.index)];
    DefUseCollector(ast, du).statement_root(node.ast_node);
    auto by_position = [&](const Occurrence& a, const Occurrence& b) {
      return ast[a.ref].span.begin < ast[b.ref].span.begin;
    };
    std::stable_sort(du.defs.begin(), du.defs.end(), by_position);
    std::stable_sort(du.uses.begin(), du.uses.end(), by_position);
  }
  return result;
}

ReachingDefinitions reaching_definitions(const Cfg& cfg, const std::vector<StatementDefUse>& defuse,
                                         bool record_history) {
  ReachingDefinitions rd;
  const int n = cfg.statement_count();
  for (int s = 0; s < n; ++s)
    for (const Occurrence& d : defuse[static_cast<std::size_t>(s)].defs) rd.sites.push_back({s, d});

  const std::size_t V = static_cast<std::size_t>(cfg.vertex_count());
  const std::size_t D = rd.sites.size();
  std::vector<std::vector<char>> gen(V, std::vector<char>(D, 0));
  std::vector<std::vector<char>> kill(V, std::vector<char>(D, 0));
  for (std::size_t i = 0; i < D; ++i) gen[static_cast<std::size_t>(rd.sites[i].stmt)][i] = 1;
  for (int s = 0; s < n; ++s) {
    for (const Occurrence& d : defuse[static_cast<std::size_t>(s)].defs) {
      if (!d.killing) continue;
      for (std::size_t i = 0; i < D; ++i)
        if (rd.sites[i].occ.variable == d.variable) kill[static_cast<std::size_t>(s)][i] = 1;
    }
  }

  rd.in.assign(V, std::vector<char>(D, 0));
  rd.out.assign(V, std::vector<char>(D, 0));
  const std::vector<int> order = cfg.reverse_post_order();
  bool changed = true;
  while (changed) {
    changed = false;
    ++rd.passes;
    for (int v : order) {
      const auto vi = static_cast<std::size_t>(v);
      std::vector<char> in(D, 0);
      for (int p : cfg.predecessors(v))
        for (std::size_t i = 0; i < D; ++i) in[i] |= rd.out[static_cast<std::size_t>(p)][i];
      std::vector<char> out(D, 0);
      for (std::size_t i = 0; i < D; ++i) out[i] = gen[vi][i] || (in[i] && !kill[vi][i]);
      if (in != rd.in[vi] || out != rd.out[vi]) changed = true;
      rd.in[vi] = std::move(in);
      rd.out[vi] = std::move(out);
    }
    if (record_history) rd.history.push_back(rd.in);
  }
  return rd;
}

std::vector<OccurrenceDataDep> data_dependencies(const Ast& ast, const Cfg& cfg,
                                                 const std::vector<StatementDefUse>& defuse) {
  ReachingDefinitions rd = reaching_definitions(cfg, defuse);
  std::vector<OccurrenceDataDep> deps;
  for (int u = 0; u < cfg.statement_count(); ++u) {
    const auto& in = rd.in[static_cast<std::size_t>(u)];
    for (const Occurrence& use : defuse[static_cast<std::size_t>(u)].uses) {
      for (std::size_t i = 0; i < rd.sites.size(); ++i) {
        if (!in[i] || rd.sites[i].occ.variable != use.variable) continue;
        const auto& site = rd.sites[i];
        deps.push_back(OccurrenceDataDep{use.variable, site.occ.ref, use.ref, site.stmt, u,
                                         ast[site.occ.ref].span, ast[use.ref].span});
      }
    }
  }
  return deps;
}

Pdg build_pdg(const ControlDeps& control, std::vector<OccurrenceDataDep> data,
              std::vector<PdgNodeSpan> nodes) {
  Pdg pdg;
  pdg.nodes = std::move(nodes);
  pdg.control = control.pairs;
  std::sort(pdg.control.begin(), pdg.control.end());
  std::sort(data.begin(), data.end(), [](const OccurrenceDataDep& a, const OccurrenceDataDep& b) {
    return std::tie(a.def_stmt, a.use_stmt, a.def_span, a.use_span) <
           std::tie(b.def_stmt, b.use_stmt, b.def_span, b.use_span);
  });
  pdg.data = std::move(data);
  return pdg;
}

FunctionAnalysis analyze(std::string_view source) {
  FunctionAnalysis fa;
  fa.tokens = lex(source);
  fa.ast = parse(fa.tokens);
  fa.nodes = segment_statements(fa.ast);
  fa.cfg = build_cfg(fa.ast, fa.nodes);
  fa.ipdom = post_dominators(fa.cfg);
  fa.defuse = def_use_sets(fa.ast, fa.nodes);
  fa.pdg = build_pdg(control_dependencies(fa.cfg, fa.ipdom),
                     data_dependencies(fa.ast, fa.cfg, fa.defuse), fa.nodes);
  return fa;
}

namespace {

std::string dot_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n' || c == '\r' || c == '\t') {
      out += ' ';
      continue;
    }
    out += c;
  }
  return out;
}

std::string_view slice(std::string_view source, Span s) {
  return source.substr(s.begin, s.end - s.begin);
}

}  // namespace

std::string pdg_to_dot(const Pdg& pdg, std::string_view source) {
  std::string out = "digraph pdg {\n";
  for (const PdgNodeSpan& n : pdg.nodes) {
    out += "  n" + std::to_string(n.index) + " [label=\"" + dot_escape(slice(source, n.span)) +
           "\", shape=" + (n.kind == PdgNodeKind::Predicate ? "diamond" : "box") + "];\n";
  }
  for (auto [src, dst] : pdg.control)
    out += "  n" + std::to_string(src) + " -> n" + std::to_string(dst) + " [style=dashed];\n";
  std::set<std::tuple<int, int, std::string>> seen;
  for (const OccurrenceDataDep& d : pdg.data) {
    if (!seen.emplace(d.def_stmt, d.use_stmt, d.variable).second) continue;
    out += "  n" + std::to_string(d.def_stmt) + " -> n" + std::to_string(d.use_stmt) +
           " [label=\"" + dot_escape(d.variable) + "\"];\n";
  }
  out += "}\n";
  return out;
}

std::string pdg_to_json(const Pdg& pdg, std::string_view source) {
  using json = nlohmann::ordered_json;
  json nodes = json::array();
  for (const PdgNodeSpan& n : pdg.nodes) {
    nodes.push_back({{"index", n.index},
                     {"kind", n.kind == PdgNodeKind::Predicate ? "predicate" : "statement"},
                     {"span", {n.span.begin, n.span.end}},
                     {"text", std::string(slice(source, n.span))}});
  }
  json control = json::array();
  for (auto [src, dst] : pdg.control) control.push_back({src, dst});
  json data = json::array();
  for (const OccurrenceDataDep& d : pdg.data) {
    data.push_back({{"variable", d.variable},
                    {"def_stmt", d.def_stmt},
                    {"use_stmt", d.use_stmt},
                    {"def_span", {d.def_span.begin, d.def_span.end}},
                    {"use_span", {d.use_span.begin, d.use_span.end}}});
  }
  json doc{{"nodes", std::move(nodes)}, {"control", std::move(control)}, {"data", std::move(data)}};
  return doc.dump(2) + "\n";
}

}  // namespace pdlab
