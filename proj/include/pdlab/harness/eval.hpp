#pragma once

#include "pdlab/common/error.hpp"
#include "pdlab/dataset/example.hpp"
#include "pdlab/harness/predict.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace pdlab::harness {

struct PairCounts {
  std::size_t truth = 0;
  std::size_t predicted = 0;
  std::size_t matched = 0;

  PairCounts& operator+=(const PairCounts& o) {
    truth += o.truth;
    predicted += o.predicted;
    matched += o.matched;
    return *this;
  }
  friend PairCounts operator+(PairCounts a, const PairCounts& b) { return a += b; }
  friend bool operator==(const PairCounts&, const PairCounts&) = default;
};

/// Micro scores; a zero denominator scores 0.
struct Scores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

Scores score(const PairCounts& c);

/// Matches between two pair lists (duplicates in either list are ignored).
PairCounts count_pairs(std::vector<IndexPair> truth, std::vector<IndexPair> predicted);

/// Same numbers from a hash-set intersection; used to cross-check.
PairCounts recount_pairs(const std::vector<IndexPair>& truth, const std::vector<IndexPair>& predicted);

enum class EvalMode { Complete, Partial };

struct EvalOptions {
  EvalMode mode = EvalMode::Complete;
  std::vector<std::size_t> ks = {5, 10, 15, 20, 25, 30};
  double threshold = 0.5;
  ExampleLimits limits;
  bool cross_check = true;
};

struct EvalRow {
  std::string bucket;
  std::size_t functions = 0;
  PairCounts control;
  PairCounts data;
  double mean_ms = 0;  // per-function prediction latency

  PairCounts overall() const { return control + data; }
};

struct EvalReport {
  std::string mode;
  double threshold = 0.5;
  std::vector<EvalRow> rows;  // buckets with at least one function, then "all" in complete mode
  nlohmann::json provenance = nlohmann::json::object();

  const EvalRow* find(const std::string& bucket) const;
};

/// LOC bucket label: "(0,10]", "(10,20]", "(20,30]" or "(30,inf)".
std::string loc_bucket(std::size_t loc);

struct FunctionEval {
  PairCounts control;
  PairCounts data;
  double ms = 0;
};

template <typename T>
FunctionEval evaluate_example(const nn::Model<T>& model, const TrainingExample& ex, double threshold,
                              bool cross_check) {
  FunctionEval r;
  std::vector<IndexPair> control, data;
  const auto start = std::chrono::steady_clock::now();
  predict_pairs(model, ex.tokens.ids, ex.node_members, threshold, control, data);
  r.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  r.control = count_pairs(ex.gc, control);
  r.data = count_pairs(ex.gd, data);
  if (cross_check && (recount_pairs(ex.gc, control) != r.control || recount_pairs(ex.gd, data) != r.data))
    throw Error("pair counting disagrees with the hash-set recount on " + ex.id);
  return r;
}

void add_to_row(EvalRow& row, const FunctionEval& f);
void finish_row(EvalRow& row, double total_ms);

/// Micro precision/recall/F1 over the concatenated pairs of every test
/// function. Complete mode buckets by lines of code; partial mode builds the
/// K-statement prefix of every function with at least K statements.
template <typename T>
EvalReport eval_intrinsic(const nn::Model<T>& model, const BpeModel& bpe, const std::vector<TrainingExample>& tests,
                          const EvalOptions& opt) {
  EvalReport report;
  report.threshold = opt.threshold;
  if (opt.mode == EvalMode::Complete) {
    report.mode = "complete";
    const char* order[] = {"(0,10]", "(10,20]", "(20,30]", "(30,inf)"};
    std::vector<EvalRow> rows(4);
    std::vector<double> ms(4, 0.0);
    for (int b = 0; b < 4; ++b) rows[static_cast<std::size_t>(b)].bucket = order[b];
    EvalRow all;
    all.bucket = "all";
    double all_ms = 0;
    for (const TrainingExample& ex : tests) {
      const std::string label = loc_bucket(lines_of_code(ex.source));
      std::size_t b = 0;
      while (rows[b].bucket != label) ++b;
      FunctionEval f = evaluate_example(model, ex, opt.threshold, opt.cross_check);
      add_to_row(rows[b], f);
      add_to_row(all, f);
      ms[b] += f.ms;
      all_ms += f.ms;
    }
    for (std::size_t b = 0; b < 4; ++b) {
      if (!rows[b].functions) continue;
      finish_row(rows[b], ms[b]);
      report.rows.push_back(rows[b]);
    }
    finish_row(all, all_ms);
    report.rows.push_back(all);
  } else {
    report.mode = "partial";
    for (std::size_t k : opt.ks) {
      EvalRow row;
      row.bucket = "K=" + std::to_string(k);
      double total = 0;
      for (const TrainingExample& ex : tests) {
        std::optional<TrainingExample> prefix;
        try {
          prefix = make_partial(ex.id, ex.source, k, bpe, opt.limits);
        } catch (const TooShort&) {
          continue;
        }
        FunctionEval f = evaluate_example(model, *prefix, opt.threshold, opt.cross_check);
        add_to_row(row, f);
        total += f.ms;
      }
      if (!row.functions) continue;
      finish_row(row, total);
      report.rows.push_back(row);
    }
  }
  return report;
}

/// Table with control, data and overall precision/recall/F1 (in percent)
/// per bucket.
std::string format_report(const EvalReport& report);
nlohmann::ordered_json report_to_json(const EvalReport& report);

struct BenchReport {
  std::size_t functions = 0;  // timed functions, warmup excluded
  std::size_t warmup = 0;
  double total_ms = 0;
  double mean_ms = 0;
  std::vector<double> per_function_ms;
  nlohmann::json provenance = nlohmann::json::object();
};

/// Times the full source-to-graph prediction one function at a time.
template <typename T>
BenchReport bench_throughput(const nn::Model<T>& model, const BpeModel& bpe, const std::vector<std::string>& sources,
                             double threshold = 0.5, std::size_t warmup = 10) {
  if (sources.size() <= warmup)
    throw DataError("benchmark needs more than " + std::to_string(warmup) + " functions");
  BenchReport r;
  r.warmup = warmup;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    PredictedPdg p = predict_dependencies(model, bpe, sources[i], threshold);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (i < warmup) continue;
    r.per_function_ms.push_back(ms);
    r.total_ms += ms;
  }
  r.functions = r.per_function_ms.size();
  r.mean_ms = r.total_ms / static_cast<double>(r.functions);
  return r;
}

std::string format_bench(const BenchReport& r);
nlohmann::ordered_json bench_to_json(const BenchReport& r);

}  // namespace pdlab::harness
