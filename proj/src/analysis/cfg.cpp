#include "pdlab/analysis/cfg.hpp"

#include <algorithm>
#include <map>
#include <utility>

namespace pdlab {

Cfg::Cfg(int statement_count, std::vector<CfgEdge> edges)
    : n_(statement_count), edges_(std::move(edges)) {
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  succ_.assign(static_cast<std::size_t>(vertex_count()), {});
  pred_.assign(static_cast<std::size_t>(vertex_count()), {});
  for (const CfgEdge& e : edges_) {
    auto& s = succ_[static_cast<std::size_t>(e.from)];
    if (std::find(s.begin(), s.end(), e.to) == s.end()) s.push_back(e.to);
    auto& p = pred_[static_cast<std::size_t>(e.to)];
    if (std::find(p.begin(), p.end(), e.from) == p.end()) p.push_back(e.from);
  }
}

std::vector<int> Cfg::reverse_post_order() const {
  std::vector<int> order;
  std::vector<char> seen(static_cast<std::size_t>(vertex_count()), 0);
  // Iterative DFS; the stack holds (vertex, next successor slot).
  std::vector<std::pair<int, std::size_t>> stack{{entry(), 0}};
  seen[static_cast<std::size_t>(entry())] = 1;
  while (!stack.empty()) {
    auto& [v, slot] = stack.back();
    const auto& succ = successors(v);
    if (slot < succ.size()) {
      int w = succ[slot++];
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        stack.emplace_back(w, 0);
      }
    } else {
      order.push_back(v);
      stack.pop_back();
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

namespace {

using Pending = std::vector<std::pair<int, BranchLabel>>;

class CfgBuilder {
 public:
  CfgBuilder(const Ast& ast, const std::vector<PdgNodeSpan>& nodes)
      : ast_(ast), n_(static_cast<int>(nodes.size())) {
    for (const PdgNodeSpan& node : nodes) index_of_[node.ast_node] = node.index;
  }

  Cfg run() {
    const int entry = n_;
    const int exit = n_ + 1;
    Pending tail = stmt(ast_[ast_.root].children.back(), {{entry, BranchLabel::None}});
    connect(tail, exit);
    edges_.push_back({entry, exit, BranchLabel::None});
    return Cfg(n_, std::move(edges_));
  }

 private:
  struct Loop {
    Pending* breaks;
    int continue_target;
  };

  int index(NodeId id) const { return index_of_.at(id); }

  void connect(const Pending& from, int to) {
    for (auto [v, label] : from) edges_.push_back({v, to, label});
  }

  Pending stmt(NodeId id, Pending preds) {
    const AstNode& n = ast_[id];
    switch (n.kind) {
      case NodeKind::Block:
        for (NodeId c : n.children) preds = stmt(c, std::move(preds));
        return preds;
      case NodeKind::Decl:
      case NodeKind::ExprStmt: {
        int s = index(id);
        connect(preds, s);
        return {{s, BranchLabel::None}};
      }
      case NodeKind::Return: {
        int s = index(id);
        connect(preds, s);
        edges_.push_back({s, n_ + 1, BranchLabel::None});
        return {};
      }
      case NodeKind::Break: {
        int s = index(id);
        connect(preds, s);
        if (!loops_.empty()) loops_.back().breaks->push_back({s, BranchLabel::None});
        return {};
      }
      case NodeKind::Continue: {
        int s = index(id);
        connect(preds, s);
        if (!loops_.empty()) edges_.push_back({s, loops_.back().continue_target, BranchLabel::None});
        return {};
      }
      case NodeKind::If: {
        int p = index(n.children[0]);
        connect(preds, p);
        Pending out = stmt(n.children[1], {{p, BranchLabel::True}});
        Pending other = n.children.size() > 2 ? stmt(n.children[2], {{p, BranchLabel::False}})
                                              : Pending{{p, BranchLabel::False}};
        out.insert(out.end(), other.begin(), other.end());
        return out;
      }
      case NodeKind::While: {
        int p = index(n.children[0]);
        connect(preds, p);
        Pending breaks;
        loops_.push_back({&breaks, p});
        Pending body = stmt(n.children[1], {{p, BranchLabel::True}});
        loops_.pop_back();
        connect(body, p);
        breaks.push_back({p, BranchLabel::False});
        return breaks;
      }
      case NodeKind::For: {
        int init = index(n.children[0]);
        int cond = index(n.children[1]);
        int update = index(n.children[2]);
        connect(preds, init);
        edges_.push_back({init, cond, BranchLabel::None});
        Pending breaks;
        loops_.push_back({&breaks, update});
        Pending body = stmt(n.children[3], {{cond, BranchLabel::True}});
        loops_.pop_back();
        connect(body, update);
        edges_.push_back({update, cond, BranchLabel::None});
        breaks.push_back({cond, BranchLabel::False});
        return breaks;
      }
      default:
        return preds;
    }
  }

  const Ast& ast_;
  int n_;
  std::map<NodeId, int> index_of_;
  std::vector<CfgEdge> edges_;
  std::vector<Loop> loops_;
};

}  // namespace

Cfg build_cfg(const Ast& ast, const std::vector<PdgNodeSpan>& nodes) {
  return CfgBuilder(ast, nodes).run();
}

std::vector<int> post_dominators(const Cfg& cfg) {
  const int n = cfg.vertex_count();
  const int exit = cfg.exit();
  const auto N = static_cast<std::size_t>(n);
  // pdom[v][w] != 0 iff w post-dominates v. Start from the full set and
  // shrink to the greatest fixpoint.
  std::vector<std::vector<char>> pdom(N, std::vector<char>(N, 1));
  pdom[static_cast<std::size_t>(exit)].assign(N, 0);
  pdom[static_cast<std::size_t>(exit)][static_cast<std::size_t>(exit)] = 1;

  std::vector<int> order = cfg.reverse_post_order();
  std::reverse(order.begin(), order.end());
  for (int v = 0; v < n; ++v)
    if (std::find(order.begin(), order.end(), v) == order.end()) order.push_back(v);

  bool changed = true;
  while (changed) {
    changed = false;
    for (int v : order) {
      if (v == exit) continue;
      const auto& succ = cfg.successors(v);
      std::vector<char> next(N, succ.empty() ? 0 : 1);
      for (int s : succ)
        for (std::size_t w = 0; w < N; ++w) next[w] = next[w] && pdom[static_cast<std::size_t>(s)][w];
      next[static_cast<std::size_t>(v)] = 1;
      if (next != pdom[static_cast<std::size_t>(v)]) {
        pdom[static_cast<std::size_t>(v)] = std::move(next);
        changed = true;
      }
    }
  }

  std::vector<int> ipdom(N, -1);
  ipdom[static_cast<std::size_t>(exit)] = exit;
  for (int v = 0; v < n; ++v) {
    if (v == exit) continue;
    const auto& set = pdom[static_cast<std::size_t>(v)];
    if (!set[static_cast<std::size_t>(exit)]) continue;  // cannot reach Exit
    auto count = std::count(set.begin(), set.end(), 1);
    // Post-dominators form a chain; the immediate one has exactly one fewer.
    for (int w = 0; w < n; ++w) {
      if (w == v || !set[static_cast<std::size_t>(w)]) continue;
      const auto& wset = pdom[static_cast<std::size_t>(w)];
      if (std::count(wset.begin(), wset.end(), 1) == count - 1) {
        ipdom[static_cast<std::size_t>(v)] = w;
        break;
      }
    }
  }
  return ipdom;
}

}  // namespace pdlab
