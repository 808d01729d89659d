#pragma once

#include "pdlab/frontend/ast.hpp"

#include <vector>

namespace pdlab {

enum class BranchLabel : int { None = 0, True = 1, False = 2 };

struct CfgEdge {
  int from;
  int to;
  BranchLabel label = BranchLabel::None;

  friend bool operator==(const CfgEdge&, const CfgEdge&) = default;
  friend auto operator<=>(const CfgEdge&, const CfgEdge&) = default;
};

/// Statement-level control flow graph. Vertices 0..n-1 are PDG node indices,
/// n is the synthetic Entry and n+1 the synthetic Exit.
class Cfg {
 public:
  Cfg() = default;
  Cfg(int statement_count, std::vector<CfgEdge> edges);

  int statement_count() const { return n_; }
  int vertex_count() const { return n_ + 2; }
  int entry() const { return n_; }
  int exit() const { return n_ + 1; }

  const std::vector<CfgEdge>& edges() const { return edges_; }
  const std::vector<int>& successors(int v) const { return succ_.at(static_cast<std::size_t>(v)); }
  const std::vector<int>& predecessors(int v) const { return pred_.at(static_cast<std::size_t>(v)); }

  /// Reverse post-order of the forward graph starting at Entry.
  std::vector<int> reverse_post_order() const;

 private:
  int n_ = 0;
  std::vector<CfgEdge> edges_;
  std::vector<std::vector<int>> succ_;
  std::vector<std::vector<int>> pred_;
};

/// Builds the intraprocedural CFG over the segmented statements, including
/// the Entry->Exit augmentation edge. `break` leaves the innermost loop,
/// `continue` jumps to its condition (`for`: its update), `return` to Exit.
Cfg build_cfg(const Ast& ast, const std::vector<PdgNodeSpan>& nodes);

/// Immediate post-dominator of every vertex; ipdom[exit] == exit. Vertices
/// that cannot reach Exit map to -1.
std::vector<int> post_dominators(const Cfg& cfg);

}  // namespace pdlab
