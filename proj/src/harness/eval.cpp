#include "pdlab/harness/eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <unordered_set>

namespace pdlab::harness {

Scores score(const PairCounts& c) {
  Scores s;
  if (c.predicted) s.precision = static_cast<double>(c.matched) / static_cast<double>(c.predicted);
  if (c.truth) s.recall = static_cast<double>(c.matched) / static_cast<double>(c.truth);
  if (s.precision + s.recall > 0) s.f1 = 2 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

PairCounts count_pairs(std::vector<IndexPair> truth, std::vector<IndexPair> predicted) {
  for (auto* v : {&truth, &predicted}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  PairCounts c{truth.size(), predicted.size(), 0};
  auto a = truth.begin();
  auto b = predicted.begin();
  while (a != truth.end() && b != predicted.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++c.matched, ++a, ++b;
    }
  }
  return c;
}

PairCounts recount_pairs(const std::vector<IndexPair>& truth, const std::vector<IndexPair>& predicted) {
  auto key = [](const IndexPair& p) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.first)) << 32) |
           static_cast<std::uint32_t>(p.second);
  };
  std::unordered_set<std::uint64_t> t, p;
  for (const auto& x : truth) t.insert(key(x));
  for (const auto& x : predicted) p.insert(key(x));
  PairCounts c{t.size(), p.size(), 0};
  for (std::uint64_t k : p) c.matched += t.count(k);
  return c;
}

const EvalRow* EvalReport::find(const std::string& bucket) const {
  for (const auto& r : rows)
    if (r.bucket == bucket) return &r;
  return nullptr;
}

std::string loc_bucket(std::size_t loc) {
  if (loc <= 10) return "(0,10]";
  if (loc <= 20) return "(10,20]";
  if (loc <= 30) return "(20,30]";
  return "(30,inf)";
}

void add_to_row(EvalRow& row, const FunctionEval& f) {
  ++row.functions;
  row.control += f.control;
  row.data += f.data;
}

void finish_row(EvalRow& row, double total_ms) {
  row.mean_ms = row.functions ? total_ms / static_cast<double>(row.functions) : 0.0;
}

std::string format_report(const EvalReport& report) {
  std::string out = fmt::format("mode: {}  threshold: {}\n", report.mode, report.threshold);
  out += fmt::format("{:<10} {:>6} | {:>7} {:>7} {:>7} | {:>7} {:>7} {:>7} | {:>7} {:>7} {:>7} | {:>8}\n", "bucket",
                     "funcs", "ctrl P", "ctrl R", "ctrl F1", "data P", "data R", "data F1", "all P", "all R",
                     "all F1", "ms/func");
  for (const EvalRow& r : report.rows) {
    const Scores c = score(r.control), d = score(r.data), o = score(r.overall());
    out += fmt::format(
        "{:<10} {:>6} | {:>7.2f} {:>7.2f} {:>7.2f} | {:>7.2f} {:>7.2f} {:>7.2f} | {:>7.2f} {:>7.2f} {:>7.2f} | {:>8.3f}\n",
        r.bucket, r.functions, 100 * c.precision, 100 * c.recall, 100 * c.f1, 100 * d.precision, 100 * d.recall,
        100 * d.f1, 100 * o.precision, 100 * o.recall, 100 * o.f1, r.mean_ms);
  }
  return out;
}

namespace {

nlohmann::ordered_json counts_json(const PairCounts& c) {
  const Scores s = score(c);
  return {{"truth", c.truth}, {"predicted", c.predicted}, {"matched", c.matched},
          {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

}  // namespace

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["mode"] = report.mode;
  j["threshold"] = report.threshold;
  j["rows"] = nlohmann::ordered_json::array();
  for (const EvalRow& r : report.rows)
    j["rows"].push_back({{"bucket", r.bucket},
                         {"functions", r.functions},
                         {"control", counts_json(r.control)},
                         {"data", counts_json(r.data)},
                         {"overall", counts_json(r.overall())},
                         {"mean_ms", r.mean_ms}});
  j["provenance"] = report.provenance;
  return j;
}

std::string format_bench(const BenchReport& r) {
  std::string out;
  for (auto it = r.provenance.begin(); it != r.provenance.end(); ++it)
    out += fmt::format("# {}: {}\n", it.key(), it.value().dump());
  out += fmt::format("functions: {} (warmup {} excluded)\ntotal: {:.3f} ms\nmean: {:.3f} ms/function\n", r.functions,
                     r.warmup, r.total_ms, r.mean_ms);
  return out;
}

nlohmann::ordered_json bench_to_json(const BenchReport& r) {
  nlohmann::ordered_json j;
  j["functions"] = r.functions;
  j["warmup"] = r.warmup;
  j["total_ms"] = r.total_ms;
  j["mean_ms"] = r.mean_ms;
  j["per_function_ms"] = r.per_function_ms;
  j["provenance"] = r.provenance;
  return j;
}

}  // namespace pdlab::harness
