#include "oracles.hpp"

#include "pdlab/analysis/dependence.hpp"
#include "pdlab/dataset/corpus.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <algorithm>

using namespace pdlab;

namespace {

bool has_edge(const Cfg& cfg, int from, int to) {
  const auto& s = cfg.successors(from);
  return std::find(s.begin(), s.end(), to) != s.end();
}

std::vector<ControlPair> control_of(std::string_view src) { return analyze(src).pdg.control; }

struct Dep {
  std::string var;
  int def_stmt, use_stmt;
  std::size_t def_at, use_at;
  friend auto operator<=>(const Dep&, const Dep&) = default;
};

std::vector<Dep> data_of(std::string_view src) {
  std::vector<Dep> out;
  for (const auto& d : analyze(src).pdg.data)
    out.push_back({d.variable, d.def_stmt, d.use_stmt, d.def_span.begin, d.use_span.begin});
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(Cfg, Sequential) {
  auto fa = analyze("void f() { a = 1; b = 2; }");
  const Cfg& cfg = fa.cfg;
  EXPECT_TRUE(has_edge(cfg, cfg.entry(), 0));
  EXPECT_TRUE(has_edge(cfg, 0, 1));
  EXPECT_TRUE(has_edge(cfg, 1, cfg.exit()));
  EXPECT_TRUE(has_edge(cfg, cfg.entry(), cfg.exit()));
  EXPECT_TRUE(cfg.predecessors(cfg.entry()).empty());
  EXPECT_TRUE(cfg.successors(cfg.exit()).empty());
}

TEST(Cfg, IfElseLabels) {
  auto fa = analyze("void f() { if (p) { a = 1; } else { b = 2; } c = 3; }");
  const Cfg& cfg = fa.cfg;
  int labelled = 0;
  for (const CfgEdge& e : cfg.edges()) {
    if (e.from == 0 && e.to == 1) { EXPECT_EQ(e.label, BranchLabel::True); ++labelled; }
    if (e.from == 0 && e.to == 2) { EXPECT_EQ(e.label, BranchLabel::False); ++labelled; }
  }
  EXPECT_EQ(labelled, 2);
  EXPECT_TRUE(has_edge(cfg, 1, 3));
  EXPECT_TRUE(has_edge(cfg, 2, 3));
}

TEST(Cfg, WhileLoop) {
  auto fa = analyze("void f() { while (p) { a = 1; } }");
  const Cfg& cfg = fa.cfg;
  EXPECT_TRUE(has_edge(cfg, 0, 1));
  EXPECT_TRUE(has_edge(cfg, 1, 0));
  EXPECT_TRUE(has_edge(cfg, 0, cfg.exit()));
}

TEST(Cfg, BreakContinueReturn) {
  // 0: i = 0, 1: i < n, 2: i = i + 1, 3: if a, 4: break, 5: if b, 6: continue, 7: return
  auto fa = analyze(
      "void f() { for (i = 0; i < n; i = i + 1) { if (a) { break; } if (b) { continue; } return; } x = 1; }");
  const Cfg& cfg = fa.cfg;
  EXPECT_TRUE(has_edge(cfg, 4, 8));   // break -> after the loop
  EXPECT_TRUE(has_edge(cfg, 6, 2));   // continue -> update
  EXPECT_TRUE(has_edge(cfg, 7, cfg.exit()));
  EXPECT_TRUE(has_edge(cfg, 2, 1));
  EXPECT_TRUE(has_edge(cfg, 1, 8));
}

TEST(Cfg, EveryVertexReachable) {
  for (const std::string& src : gen_synthetic_corpus(21, 100)) {
    auto fa = analyze(src);
    EXPECT_EQ(fa.cfg.reverse_post_order().size(), static_cast<std::size_t>(fa.cfg.vertex_count()));
    for (int v = 0; v < fa.cfg.vertex_count(); ++v) EXPECT_NE(fa.ipdom[static_cast<std::size_t>(v)], -1);
  }
}

TEST(PostDominators, StraightLine) {
  auto fa = analyze("void f() { a = 1; b = 2; }");
  EXPECT_EQ(fa.ipdom[0], 1);
  EXPECT_EQ(fa.ipdom[1], fa.cfg.exit());
  EXPECT_EQ(fa.ipdom[static_cast<std::size_t>(fa.cfg.exit())], fa.cfg.exit());
}

TEST(PostDominators, Diamond) {
  auto fa = analyze("void f() { if (p) { a = 1; } else { b = 2; } c = 3; }");
  EXPECT_EQ(fa.ipdom[0], 3);
}

TEST(PostDominators, WhileLoop) {
  auto fa = analyze("void f() { while (p) { a = 1; } }");
  EXPECT_EQ(fa.ipdom[1], 0);
  EXPECT_EQ(fa.ipdom[0], fa.cfg.exit());
}

TEST(PostDominators, MatchesBruteForce) {
  GeneratorProfile small;
  small.max_statements = 12;
  for (const std::string& src : gen_synthetic_corpus(22, 100, small)) {
    auto fa = analyze(src);
    const Cfg& cfg = fa.cfg;
    for (int v = 0; v < cfg.vertex_count(); ++v) {
      if (v == cfg.exit()) continue;
      int ip = fa.ipdom[static_cast<std::size_t>(v)];
      ASSERT_TRUE(oracle::post_dominates(cfg, ip, v));
      // Every other strict post-dominator also post-dominates ip.
      for (int w = 0; w < cfg.vertex_count(); ++w)
        if (w != v && oracle::post_dominates(cfg, w, v)) EXPECT_TRUE(oracle::post_dominates(cfg, w, ip));
    }
  }
}

TEST(ControlDependence, Sequential) { EXPECT_TRUE(control_of("void f() { a = 1; b = 2; }").empty()); }

TEST(ControlDependence, GuardedStatement) {
  EXPECT_EQ(control_of("void f() { if (a > 0) { b = 1; } }"), (std::vector<ControlPair>{{0, 1}}));
}

TEST(ControlDependence, LoopSelfDependence) {
  EXPECT_EQ(control_of("void f() { while (i < n) { i = i + 1; } }"),
            (std::vector<ControlPair>{{0, 0}, {0, 1}}));
}

TEST(ControlDependence, ForUpdateDependsOnCondition) {
  auto c = control_of("void f() { for (i = 0; i < n; i = i + 1) { s = s + i; } }");
  EXPECT_EQ(c, (std::vector<ControlPair>{{1, 1}, {1, 2}, {1, 3}}));
}

TEST(ControlDependence, NestedIfIsNotTransitive) {
  auto c = control_of("void f() { if (a) { if (b) { x = 1; } } }");
  EXPECT_EQ(c, (std::vector<ControlPair>{{0, 1}, {1, 2}}));
}

TEST(ControlDependence, BreakGuard) {
  // 0: while p, 1: if q, 2: break, 3: a = 1. Whether the loop repeats is
  // decided by q, not by p.
  auto c = control_of("void f() { while (p) { if (q) { break; } a = 1; } }");
  EXPECT_EQ(c, (std::vector<ControlPair>{{0, 1}, {1, 0}, {1, 2}, {1, 3}}));
}

TEST(ControlDependence, SourcesArePredicates) {
  for (const std::string& src : gen_synthetic_corpus(23, 100)) {
    auto fa = analyze(src);
    for (auto [s, d] : fa.pdg.control) EXPECT_EQ(fa.nodes[static_cast<std::size_t>(s)].kind, PdgNodeKind::Predicate);
  }
}

TEST(DefUse, Examples) {
  auto du = analyze("void f() { x = y + y; x += 1; int a; ++k; buf[i] = v; }").defuse;
  ASSERT_EQ(du.size(), 5u);
  auto vars = [](const std::vector<Occurrence>& v) {
    std::vector<std::string> out;
    for (const auto& o : v) out.push_back(o.variable);
    return out;
  };
  EXPECT_EQ(vars(du[0].defs), (std::vector<std::string>{"x"}));
  EXPECT_EQ(vars(du[0].uses), (std::vector<std::string>{"y", "y"}));
  EXPECT_EQ(vars(du[1].defs), (std::vector<std::string>{"x"}));
  EXPECT_EQ(vars(du[1].uses), (std::vector<std::string>{"x"}));
  EXPECT_EQ(vars(du[2].defs), (std::vector<std::string>{"a"}));
  EXPECT_TRUE(du[2].uses.empty());
  EXPECT_EQ(vars(du[3].defs), (std::vector<std::string>{"k"}));
  EXPECT_EQ(vars(du[3].uses), (std::vector<std::string>{"k"}));
  EXPECT_EQ(vars(du[4].defs), (std::vector<std::string>{"buf"}));
  EXPECT_FALSE(du[4].defs[0].killing);
  EXPECT_EQ(vars(du[4].uses), (std::vector<std::string>{"i", "v"}));
}

TEST(DefUse, CallsDefineNothing) {
  auto du = analyze("void f() { g(x, y); }").defuse;
  EXPECT_TRUE(du[0].defs.empty());
  EXPECT_EQ(du[0].uses.size(), 2u);
}

TEST(DataDependence, Simple) {
  EXPECT_EQ(data_of("void f() { x = 1; y = x; }"), (std::vector<Dep>{{"x", 0, 1, 11, 22}}));
}

TEST(DataDependence, Kill) {
  auto d = data_of("void f() { x = 1; x = 2; y = x; }");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].def_stmt, 1);
  EXPECT_EQ(d[0].use_stmt, 2);
}

TEST(DataDependence, LoopCarried) {
  const std::string src = "void f() { i = 0; while (i < n) { i = i + 1; } }";
  auto d = data_of(src);
  const std::size_t def0 = src.find("i = 0");
  const std::size_t cond = src.find("i < n");
  const std::size_t def2 = src.find("i = i + 1");
  const std::size_t rhs = def2 + 4;
  std::vector<Dep> want{{"i", 0, 1, def0, cond}, {"i", 0, 2, def0, rhs}, {"i", 2, 1, def2, cond}, {"i", 2, 2, def2, rhs}};
  std::sort(want.begin(), want.end());
  EXPECT_EQ(d, want);
}

TEST(DataDependence, ArrayStoreDoesNotKill) {
  auto d = data_of("void f() { buf[0] = 1; buf[1] = 2; y = buf[0]; }");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].def_stmt, 0);
  EXPECT_EQ(d[1].def_stmt, 1);
}

TEST(DataDependence, MultipleUseOccurrences) {
  auto d = data_of("void f() { x = 1; y = x * x; }");
  EXPECT_EQ(d.size(), 2u);
}

TEST(ReachingDefinitions, MonotoneAndBounded) {
  for (const std::string& src : gen_synthetic_corpus(24, 150)) {
    auto fa = analyze(src);
    auto rd = reaching_definitions(fa.cfg, fa.defuse, true);
    EXPECT_LE(rd.passes, fa.cfg.vertex_count() + 2);
    for (std::size_t p = 1; p < rd.history.size(); ++p)
      for (std::size_t v = 0; v < rd.history[p].size(); ++v)
        for (std::size_t s = 0; s < rd.history[p][v].size(); ++s)
          EXPECT_GE(rd.history[p][v][s], rd.history[p - 1][v][s]);
  }
}

TEST(Oracle, ControlAndDataMatchBruteForce) {
  GeneratorProfile small;
  small.max_statements = 12;
  for (const std::string& src : gen_synthetic_corpus(25, 200, small)) {
    auto fa = analyze(src);
    std::set<std::pair<int, int>> got(fa.pdg.control.begin(), fa.pdg.control.end());
    ASSERT_EQ(got, oracle::control_dependencies(fa.cfg)) << src;
    std::set<oracle::DataKey> data;
    for (const auto& d : fa.pdg.data) data.emplace(d.def_stmt, d.use_stmt, d.def_occ, d.use_occ);
    ASSERT_EQ(data, oracle::data_dependencies(fa.cfg, fa.defuse)) << src;
  }
}

TEST(Oracle, HandWrittenEdgeCases) {
  const char* cases[] = {
      "void f() { while (a) { if (b) { continue; } c = a; a = c - 1; } }",
      "int f(int n) { for (i = 0; i < n; ++i) { if (i == 3) { return i; } s += i; } return s; }",
      "void f() { if (a) { x = 1; } else if (b) { x = 2; } else { return; } y = x; }",
      "void f() { while (a) { while (b) { if (c) { break; } b -= 1; } a -= 1; } }",
  };
  for (const char* src : cases) {
    auto fa = analyze(src);
    std::set<std::pair<int, int>> got(fa.pdg.control.begin(), fa.pdg.control.end());
    EXPECT_EQ(got, oracle::control_dependencies(fa.cfg)) << src;
    std::set<oracle::DataKey> data;
    for (const auto& d : fa.pdg.data) data.emplace(d.def_stmt, d.use_stmt, d.def_occ, d.use_occ);
    EXPECT_EQ(data, oracle::data_dependencies(fa.cfg, fa.defuse)) << src;
  }
}

TEST(Pdg, DeterministicExport) {
  const std::string src = gen_synthetic_corpus(26, 1)[0];
  auto a = analyze(src), b = analyze(src);
  EXPECT_EQ(pdg_to_json(a.pdg, src), pdg_to_json(b.pdg, src));
  EXPECT_EQ(pdg_to_dot(a.pdg, src), pdg_to_dot(b.pdg, src));
}

TEST(Pdg, DotStyles) {
  const std::string src = "void f() { a = 1; if (a > 0) { b = a; } else { b = 0; } }";
  auto fa = analyze(src);
  std::string dot = pdg_to_dot(fa.pdg, src);
  std::size_t dashed = 0;
  for (std::size_t p = dot.find("style=dashed"); p != std::string::npos; p = dot.find("style=dashed", p + 1)) ++dashed;
  EXPECT_EQ(dashed, 2u);
  EXPECT_NE(dot.find("label=\"a\""), std::string::npos);
}

TEST(Pdg, JsonCarriesSpans) {
  const std::string src = "void f() { x = 1; y = x; }";
  auto j = nlohmann::json::parse(pdg_to_json(analyze(src).pdg, src));
  ASSERT_EQ(j["data"].size(), 1u);
  EXPECT_EQ(j["nodes"].size(), 2u);
  EXPECT_EQ(j["control"].size(), 0u);
}
