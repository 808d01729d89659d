#pragma once

#include "pdlab/analysis/cfg.hpp"
#include "pdlab/frontend/ast.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pdlab {

/// (src, dst): statement dst is control-dependent on predicate src.
using ControlPair = std::pair<int, int>;

/// Sorted, duplicate-free control dependence pairs. Entry-sourced
/// dependencies are dropped.
struct ControlDeps {
  std::vector<ControlPair> pairs;
  friend bool operator==(const ControlDeps&, const ControlDeps&) = default;
};

ControlDeps control_dependencies(const Cfg& cfg, const std::vector<int>& ipdom);

/// One identifier occurrence taking part in a definition or a use.
struct Occurrence {
  std::string variable;
  NodeId ref = kNoNode;  // IdentifierRef node
  bool killing = true;   // array element stores define without killing
  friend bool operator==(const Occurrence&, const Occurrence&) = default;
};

struct StatementDefUse {
  std::vector<Occurrence> defs;
  std::vector<Occurrence> uses;
};

/// Per PDG node definitions and uses, in textual order of the occurrence.
std::vector<StatementDefUse> def_use_sets(const Ast& ast, const std::vector<PdgNodeSpan>& nodes);

struct OccurrenceDataDep {
  std::string variable;
  NodeId def_occ = kNoNode;
  NodeId use_occ = kNoNode;
  int def_stmt = 0;
  int use_stmt = 0;
  Span def_span;
  Span use_span;

  friend bool operator==(const OccurrenceDataDep&, const OccurrenceDataDep&) = default;
};

/// Outcome of the reaching-definitions fixpoint. A definition site is the
/// index into `sites`; in/out sets are indexed by CFG vertex.
struct ReachingDefinitions {
  struct Site {
    int stmt;
    Occurrence occ;
  };
  std::vector<Site> sites;
  std::vector<std::vector<char>> in;
  std::vector<std::vector<char>> out;
  int passes = 0;
  /// Snapshot of every `in` set after each pass, filled only on request.
  std::vector<std::vector<std::vector<char>>> history;
};

ReachingDefinitions reaching_definitions(const Cfg& cfg, const std::vector<StatementDefUse>& defuse,
                                         bool record_history = false);

/// One dependency per (reaching definition occurrence, use occurrence) of the
/// same variable. Requires the AST for occurrence spans.
std::vector<OccurrenceDataDep> data_dependencies(const Ast& ast, const Cfg& cfg,
                                                 const std::vector<StatementDefUse>& defuse);

struct Pdg {
  std::vector<PdgNodeSpan> nodes;
  std::vector<ControlPair> control;
  std::vector<OccurrenceDataDep> data;
};

/// Aggregates into one graph with control edges sorted by (src, dst) and data
/// edges by (def_stmt, use_stmt, def span, use span).
Pdg build_pdg(const ControlDeps& control, std::vector<OccurrenceDataDep> data,
              std::vector<PdgNodeSpan> nodes);

/// Everything derived from one function's source.
struct FunctionAnalysis {
  std::vector<CodeToken> tokens;
  Ast ast;
  std::vector<PdgNodeSpan> nodes;
  Cfg cfg;
  std::vector<int> ipdom;
  std::vector<StatementDefUse> defuse;
  Pdg pdg;
};

/// lex -> parse -> segment -> CFG -> dependencies. Throws frontend errors.
FunctionAnalysis analyze(std::string_view source);

/// DOT rendering: control edges dashed, data edges labeled with the variable.
std::string pdg_to_dot(const Pdg& pdg, std::string_view source);

/// JSON rendering with node spans and typed edge lists carrying occurrence spans.
std::string pdg_to_json(const Pdg& pdg, std::string_view source);

}  // namespace pdlab
