#include "pdlab/harness/cli.hpp"

#include "pdlab/common/error.hpp"
#include "pdlab/common/hash.hpp"
#include "pdlab/dataset/corpus.hpp"
#include "pdlab/dataset/example.hpp"
#include "pdlab/harness/eval.hpp"
#include "pdlab/harness/predict.hpp"
#include "pdlab/harness/pretrain.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace pdlab::harness {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

/// Writes to `path`, or to `out` when the path is empty or "-".
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") out << text;
  else write_file(path, text);
}

struct SourceFunction {
  std::string id;
  std::string source;
};

/// A JSONL file of {"id", "source"} objects, a directory of .c files (one
/// function each), or a single .c file.
std::vector<SourceFunction> load_corpus(const fs::path& path) {
  std::vector<SourceFunction> out;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path))
      if (e.is_regular_file() && e.path().extension() == ".c") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back({f.stem().string(), read_file(f)});
  } else if (path.extension() == ".jsonl") {
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        auto j = nlohmann::json::parse(line);
        out.push_back({j.at("id").get<std::string>(), j.at("source").get<std::string>()});
      } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ":" + std::to_string(n) + ": " + e.what());
      }
    }
  } else {
    out.push_back({path.stem().string(), read_file(path)});
  }
  return out;
}

BpeModel load_tokenizer(const fs::path& dir) { return BpeModel::load(dir / "vocab.txt", dir / "merges.txt"); }

std::string tokenizer_hash(const fs::path& dir) {
  return sha256_hex(read_file(dir / "vocab.txt") + read_file(dir / "merges.txt"));
}

ExampleFile load_examples(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return read_examples(in);
}

ojson span_json(const Span& s) { return ojson::array({s.begin, s.end}); }

ojson tokens_json(const std::vector<CodeToken>& tokens) {
  ojson arr = ojson::array();
  for (const CodeToken& t : tokens)
    arr.push_back({{"kind", std::string(to_string(t.kind))}, {"text", t.text}, {"span", span_json(t.span)}});
  return arr;
}

ojson ast_json(const Ast& ast, NodeId id) {
  const AstNode& n = ast[id];
  ojson j;
  j["kind"] = std::string(to_string(n.kind));
  j["span"] = span_json(n.span);
  if (!n.text.empty()) j["text"] = n.text;
  if (!n.type.empty()) j["type"] = n.type;
  if (n.array_extent) j["array_extent"] = *n.array_extent;
  if (!n.children.empty()) {
    j["children"] = ojson::array();
    for (NodeId c : n.children) j["children"].push_back(c == kNoNode ? ojson(nullptr) : ast_json(ast, c));
  }
  return j;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + item + "' in list '" + text + "'");
    }
  }
  return out;
}

ojson checkpoint_provenance(const fs::path& path, const nn::CheckpointData& d) {
  ojson j;
  j["checkpoint"] = path.filename().string();
  j["checkpoint_sha256"] = sha256_hex(read_file(path));
  j["model"] = ojson::parse(d.meta.at("model").dump());
  j["run"] = ojson::parse(d.meta.at("run").dump());
  j["step"] = d.meta.at("state").at("step").get<std::uint64_t>();
  return j;
}

struct Options {
  // shared
  std::string input;
  std::string output;
  std::string format = "json";
  std::string tokenizer;
  std::string checkpoint;
  double threshold = 0.5;
  // corpus
  std::uint64_t count = 2000;
  std::uint64_t seed = 1;
  int min_statements = 3;
  int max_statements = 40;
  // tokenizer
  std::size_t vocab_size = kDefaultVocabSize;
  // dataset
  std::string ratios = "0.8,0.1,0.1";
  std::size_t max_seq_len = 256;
  std::size_t max_nodes = 50;
  std::vector<std::size_t> partial_k;
  // pretrain
  std::string train;
  std::string resume;
  std::string profile = "desk";
  std::string objectives = "mlm,cdp,ddp";
  double cdp_weight = 5, ddp_weight = 20, mlm_weight = 1;
  int d_model = 0, n_layers = -1, n_heads = 0, ffn_dim = 0, head_hidden = -1;
  std::size_t batch_size = 0;  // 0 keeps the profile's value
  int epochs = 0;
  double lr = 0;
  std::uint64_t horizon = 0;
  double clip_norm = 0;
  std::uint64_t lr_warmup = 0;
  std::size_t checkpoint_every = 0;
  std::size_t log_every = 100;
  // eval / bench
  std::string test;
  std::string mode = "complete";
  std::vector<std::size_t> ks = {5, 10, 15, 20, 25, 30};
  std::string json_out;
  std::size_t warmup = 10;
};

int cmd_lex(const Options& o, std::ostream& out) {
  const std::string src = read_file(o.input);
  emit(o.output, tokens_json(lex(src)).dump(2) + "\n", out);
  return kExitOk;
}

int cmd_parse(const Options& o, std::ostream& out) {
  const std::string src = read_file(o.input);
  Ast ast = parse(lex(src));
  emit(o.output, ast_json(ast, ast.root).dump(2) + "\n", out);
  return kExitOk;
}

int cmd_pdg(const Options& o, std::ostream& out) {
  const std::string src = read_file(o.input);
  FunctionAnalysis fa = analyze(src);
  if (o.format == "dot") emit(o.output, pdg_to_dot(fa.pdg, src), out);
  else emit(o.output, pdg_to_json(fa.pdg, src) + "\n", out);
  return kExitOk;
}

int cmd_gen_corpus(const Options& o, std::ostream& out) {
  GeneratorProfile profile;
  profile.min_statements = o.min_statements;
  profile.max_statements = o.max_statements;
  const auto sources = gen_synthetic_corpus(o.seed, o.count, profile);
  std::string text;
  for (std::size_t i = 0; i < sources.size(); ++i)
    text += ojson{{"id", "gen" + std::to_string(o.seed) + "_" + std::to_string(i)}, {"source", sources[i]}}.dump() + "\n";
  emit(o.output, text, out);
  return kExitOk;
}

int cmd_tokenizer_train(const Options& o, std::ostream&) {
  std::vector<std::string> sources;
  for (auto& f : load_corpus(o.input)) sources.push_back(std::move(f.source));
  BpeModel m = train_bpe(sources, o.vocab_size);
  fs::create_directories(o.output);
  m.save(fs::path(o.output) / "vocab.txt", fs::path(o.output) / "merges.txt");
  spdlog::info("tokenizer: {} entries, {} merges from {} functions -> {}", m.size(), m.merges().size(),
               sources.size(), o.output);
  return kExitOk;
}

int cmd_dataset_build(const Options& o, std::ostream&) {
  const auto corpus = load_corpus(o.input);
  std::vector<std::string> sources;
  for (const auto& f : corpus) sources.push_back(f.source);
  const auto r = parse_list(o.ratios);
  if (r.size() != 3) throw ConfigError("--ratios needs three values");
  CorpusSplit split = dedup_and_split(sources, {r[0], r[1], r[2]}, o.seed);
  const BpeModel bpe = load_tokenizer(o.tokenizer);
  const ExampleLimits limits{o.max_seq_len, o.max_nodes};
  ojson provenance = {{"corpus", fs::path(o.input).filename().string()},
                      {"corpus_sha256", sha256_hex(read_file(o.input))},
                      {"tokenizer_sha256", tokenizer_hash(o.tokenizer)},
                      {"seed", o.seed},
                      {"ratios", r},
                      {"max_seq_len", limits.max_seq_len},
                      {"max_nodes", limits.max_nodes},
                      {"functions", corpus.size()},
                      {"unique", split.registry.size()}};
  auto build = [&](const std::vector<std::size_t>& idx, const char* name) {
    std::vector<TrainingExample> out;
    std::size_t skipped = 0;
    for (std::size_t i : idx) {
      try {
        out.push_back(make_example(corpus[i].id, corpus[i].source, bpe, limits));
      } catch (const DataError& e) {
        ++skipped;
        spdlog::warn("{}: skipping {}: {}", name, corpus[i].id, e.what());
      }
    }
    if (skipped) spdlog::warn("{}: {} functions skipped", name, skipped);
    return out;
  };
  fs::create_directories(o.output);
  for (auto [idx, name] : {std::pair{&split.train, "train"}, {&split.valid, "valid"}, {&split.test, "test"}}) {
    auto examples = build(*idx, name);
    ojson prov = provenance;
    prov["split"] = name;
    std::ostringstream text;
    write_examples(text, examples, prov);
    write_file(fs::path(o.output) / (std::string(name) + ".jsonl"), text.str());
    spdlog::info("{}: {} examples", name, examples.size());
  }
  for (std::size_t k : o.partial_k) {
    std::vector<TrainingExample> prefixes;
    for (std::size_t i : split.test) {
      try {
        prefixes.push_back(make_partial(corpus[i].id, corpus[i].source, k, bpe, limits));
      } catch (const DataError&) {
      }
    }
    ojson prov = provenance;
    prov["split"] = "test";
    prov["partial_k"] = k;
    std::ostringstream text;
    write_examples(text, prefixes, prov);
    write_file(fs::path(o.output) / ("test.k" + std::to_string(k) + ".jsonl"), text.str());
    spdlog::info("test.k{}: {} prefixes", k, prefixes.size());
  }
  return kExitOk;
}

TrainRunConfig run_config(const Options& o, std::size_t vocab) {
  TrainRunConfig c = o.profile == "paper" ? TrainRunConfig::paper(vocab) : TrainRunConfig::desk(vocab);
  if (o.profile != "paper" && o.profile != "desk") throw ConfigError("unknown profile '" + o.profile + "'");
  if (o.d_model > 0) c.model.d_model = o.d_model;
  if (o.n_layers >= 0) c.model.n_layers = o.n_layers;
  if (o.n_heads > 0) c.model.n_heads = o.n_heads;
  if (o.ffn_dim > 0) c.model.ffn_dim = o.ffn_dim;
  if (o.head_hidden >= 0) c.model.head_hidden = o.head_hidden;
  c.model.max_seq_len = std::max(c.model.max_seq_len, o.max_seq_len);
  c.model.m_c = o.max_nodes;
  c.weights = weights_for_objectives(o.objectives, nn::LossWeights{o.cdp_weight, o.ddp_weight, o.mlm_weight});
  if (o.batch_size > 0) c.batch_size = o.batch_size;
  if (o.epochs > 0) c.epochs = o.epochs;
  if (o.lr > 0) c.lr = o.lr;
  c.horizon = o.horizon;
  c.clip_norm = o.clip_norm;
  c.warmup = o.lr_warmup;
  c.seed = o.seed;
  c.checkpoint_every = o.checkpoint_every;
  c.validate();
  return c;
}

int cmd_pretrain(const Options& o, std::ostream&) {
  const BpeModel bpe = load_tokenizer(o.tokenizer);
  ExampleFile data = load_examples(o.train);
  for (const auto& ex : data.examples)
    for (int id : ex.tokens.ids)
      if (id < 0 || static_cast<std::size_t>(id) >= bpe.size())
        throw DataError("example " + ex.id + " uses token ids outside the tokenizer");
  Trainer<float> trainer = o.resume.empty() ? Trainer<float>(run_config(o, bpe.size()))
                                            : Trainer<float>::resume(nn::read_checkpoint(o.resume));
  const ojson provenance = {{"train", fs::path(o.train).filename().string()},
                            {"train_sha256", sha256_hex(read_file(o.train))},
                            {"tokenizer_sha256", tokenizer_hash(o.tokenizer)},
                            {"dataset", data.header.value("provenance", nlohmann::json::object())}};
  spdlog::info("pretrain: {} examples, {} parameters, weights cdp={} ddp={} mlm={}", data.examples.size(),
               trainer.model().params().scalar_count(), trainer.config().weights.cdp, trainer.config().weights.ddp,
               trainer.config().weights.mlm);
  trainer.train(
      data.examples,
      [&](const StepStats& s) {
        if (o.log_every && s.step % o.log_every == 0)
          spdlog::info("step {} epoch {} lr {:.3e} joint {:.4f} cdp {:.4f} ddp {:.4f} mlm {:.4f}", s.step, s.epoch,
                       s.lr, s.joint, s.cdp, s.ddp, s.mlm);
      },
      [&](const Trainer<float>& t) {
        nn::CheckpointData d = t.checkpoint();
        d.meta["provenance"] = provenance;
        nn::write_checkpoint(o.output, d);
        spdlog::info("checkpoint at step {} -> {}", t.steps(), o.output);
      });
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const nn::CheckpointData ckpt = nn::read_checkpoint(o.checkpoint);
  const auto model = load_model<float>(ckpt);
  const BpeModel bpe = load_tokenizer(o.tokenizer);
  ExampleFile tests = load_examples(o.test);
  EvalOptions opt;
  if (o.mode == "partial") opt.mode = EvalMode::Partial;
  else if (o.mode != "complete") throw ConfigError("--mode must be partial or complete");
  opt.ks = o.ks;
  opt.threshold = o.threshold;
  opt.limits = {model.config().max_seq_len, model.config().m_c};
  EvalReport report = eval_intrinsic(model, bpe, tests.examples, opt);
  report.provenance = checkpoint_provenance(o.checkpoint, ckpt);
  report.provenance["test"] = fs::path(o.test).filename().string();
  report.provenance["test_sha256"] = sha256_hex(read_file(o.test));
  report.provenance["dataset"] = tests.header.value("provenance", nlohmann::json::object());
  out << format_report(report);
  if (!o.json_out.empty()) emit(o.json_out, report_to_json(report).dump(2) + "\n", out);
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
  const auto model = load_model<float>(nn::read_checkpoint(o.checkpoint));
  const BpeModel bpe = load_tokenizer(o.tokenizer);
  const std::string src = read_file(o.input);
  PredictedPdg p = predict_dependencies(model, bpe, src, o.threshold);
  auto text = [&](const Span& s) { return src.substr(s.begin, s.size()); };
  ojson j;
  j["parsed"] = p.parsed;
  j["threshold"] = o.threshold;
  j["nodes"] = ojson::array();
  for (const auto& n : p.nodes)
    j["nodes"].push_back({{"index", n.index},
                          {"kind", n.kind == PdgNodeKind::Predicate ? "predicate" : "statement"},
                          {"span", span_json(n.span)},
                          {"text", text(n.span)}});
  j["control"] = ojson::array();
  for (auto [a, b] : p.control) j["control"].push_back({a, b});
  j["data"] = ojson::array();
  for (auto [a, b] : p.data) {
    const Span sa = p.tokens.spans[static_cast<std::size_t>(a)], sb = p.tokens.spans[static_cast<std::size_t>(b)];
    j["data"].push_back({{"from", a}, {"to", b}, {"from_text", text(sa)}, {"to_text", text(sb)},
                         {"from_span", span_json(sa)}, {"to_span", span_json(sb)}});
  }
  emit(o.output, j.dump(2) + "\n", out);
  return kExitOk;
}

int cmd_bench(const Options& o, std::ostream& out) {
  const nn::CheckpointData ckpt = nn::read_checkpoint(o.checkpoint);
  const auto model = load_model<float>(ckpt);
  const BpeModel bpe = load_tokenizer(o.tokenizer);
  std::vector<std::string> sources;
  for (auto& ex : load_examples(o.test).examples) sources.push_back(std::move(ex.source));
  BenchReport r = bench_throughput(model, bpe, sources, o.threshold, o.warmup);
  r.provenance = checkpoint_provenance(o.checkpoint, ckpt);
  r.provenance["test"] = fs::path(o.test).filename().string();
  r.provenance["threshold"] = o.threshold;
  r.provenance["batch_size"] = 1;
  r.provenance["threads"] = 1;
  out << format_bench(r);
  if (!o.json_out.empty()) emit(o.json_out, bench_to_json(r).dump(2) + "\n", out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Program dependence analysis, tokenizer, dataset and pre-training toolkit", "pdlab"};
  app.set_config("--config", "", "TOML/INI file whose values act as defaults; flags override it");
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

  auto* lex_cmd = app.add_subcommand("lex", "Print code tokens with byte spans as JSON");
  lex_cmd->add_option("file", o.input, "C source file")->required()->check(CLI::ExistingFile);
  lex_cmd->add_option("-o,--out", o.output, "Output file (default stdout)");

  auto* parse_cmd = app.add_subcommand("parse", "Print the abstract syntax tree as JSON");
  parse_cmd->add_option("file", o.input, "C source file")->required()->check(CLI::ExistingFile);
  parse_cmd->add_option("-o,--out", o.output, "Output file (default stdout)");

  auto* pdg_cmd = app.add_subcommand("pdg", "Print the program dependence graph");
  pdg_cmd->add_option("file", o.input, "C source file")->required()->check(CLI::ExistingFile);
  pdg_cmd->add_option("--format", o.format, "dot or json")->check(CLI::IsMember({"dot", "json"}))->capture_default_str();
  pdg_cmd->add_option("-o,--out", o.output, "Output file (default stdout)");

  auto* gen_cmd = app.add_subcommand("gen-corpus", "Generate synthetic functions as JSONL");
  gen_cmd->add_option("--count", o.count, "Number of functions")->capture_default_str();
  gen_cmd->add_option("--seed", o.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--min-statements", o.min_statements)->capture_default_str();
  gen_cmd->add_option("--max-statements", o.max_statements)->capture_default_str();
  gen_cmd->add_option("-o,--out", o.output, "Output file (default stdout)");

  auto* tok_cmd = app.add_subcommand("tokenizer-train", "Train the byte-level BPE tokenizer");
  tok_cmd->add_option("--corpus", o.input, "JSONL corpus, directory of .c files, or one .c file")->required();
  tok_cmd->add_option("--vocab-size", o.vocab_size)->capture_default_str();
  tok_cmd->add_option("-o,--out", o.output, "Output directory for vocab.txt and merges.txt")->required();

  auto* ds_cmd = app.add_subcommand("dataset-build", "Deduplicate, split and label a corpus");
  ds_cmd->add_option("--corpus", o.input, "JSONL corpus, directory of .c files, or one .c file")->required();
  ds_cmd->add_option("--tokenizer", o.tokenizer, "Tokenizer directory")->required();
  ds_cmd->add_option("-o,--out", o.output, "Output directory")->required();
  ds_cmd->add_option("--seed", o.seed, "Split seed")->capture_default_str();
  ds_cmd->add_option("--ratios", o.ratios, "train,valid,test fractions")->capture_default_str();
  ds_cmd->add_option("--max-seq-len", o.max_seq_len)->capture_default_str();
  ds_cmd->add_option("--max-nodes", o.max_nodes)->capture_default_str();
  ds_cmd->add_option("--partial-k", o.partial_k, "Also write K-statement test prefixes")->delimiter(',');

  auto* pt_cmd = app.add_subcommand("pretrain", "Pre-train the encoder on the joint objective");
  pt_cmd->add_option("--train", o.train, "Training examples (JSONL)")->required();
  pt_cmd->add_option("--tokenizer", o.tokenizer, "Tokenizer directory")->required();
  pt_cmd->add_option("-o,--out", o.output, "Checkpoint path")->required();
  pt_cmd->add_option("--resume", o.resume, "Continue from this checkpoint");
  pt_cmd->add_option("--profile", o.profile, "desk or paper")->capture_default_str();
  pt_cmd->add_option("--objectives", o.objectives, "Subset of mlm,cdp,ddp")->capture_default_str();
  pt_cmd->add_option("--cdp-weight", o.cdp_weight)->capture_default_str();
  pt_cmd->add_option("--ddp-weight", o.ddp_weight)->capture_default_str();
  pt_cmd->add_option("--mlm-weight", o.mlm_weight)->capture_default_str();
  pt_cmd->add_option("--d-model", o.d_model);
  pt_cmd->add_option("--layers", o.n_layers);
  pt_cmd->add_option("--heads", o.n_heads);
  pt_cmd->add_option("--ffn-dim", o.ffn_dim);
  pt_cmd->add_option("--head-hidden", o.head_hidden);
  pt_cmd->add_option("--max-seq-len", o.max_seq_len)->capture_default_str();
  pt_cmd->add_option("--max-nodes", o.max_nodes)->capture_default_str();
  pt_cmd->add_option("--batch-size", o.batch_size, "Examples per step (default from profile)");
  pt_cmd->add_option("--epochs", o.epochs, "Passes over the data (default from profile)");
  pt_cmd->add_option("--lr", o.lr, "Peak learning rate (default from profile)");
  pt_cmd->add_option("--horizon", o.horizon, "Schedule length in steps; 0 spans the whole run")->capture_default_str();
  pt_cmd->add_option("--clip-norm", o.clip_norm, "Cap on the global gradient norm; 0 disables")->capture_default_str();
  pt_cmd->add_option("--lr-warmup", o.lr_warmup, "Steps of linear learning-rate ramp")->capture_default_str();
  pt_cmd->add_option("--seed", o.seed)->capture_default_str();
  pt_cmd->add_option("--checkpoint-every", o.checkpoint_every, "Steps between checkpoints; 0 only at the end")
      ->capture_default_str();
  pt_cmd->add_option("--log-every", o.log_every)->capture_default_str();

  auto* eval_cmd = app.add_subcommand("eval", "Intrinsic precision/recall/F1 of predicted dependencies");
  eval_cmd->add_option("--checkpoint", o.checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--tokenizer", o.tokenizer)->required();
  eval_cmd->add_option("--test", o.test, "Test examples (JSONL)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--mode", o.mode, "complete or partial")->check(CLI::IsMember({"complete", "partial"}))
      ->capture_default_str();
  eval_cmd->add_option("--k", o.ks, "Prefix sizes for partial mode")->delimiter(',');
  eval_cmd->add_option("--threshold", o.threshold)->capture_default_str();
  eval_cmd->add_option("--json", o.json_out, "Also write the report as JSON");

  auto* pred_cmd = app.add_subcommand("predict", "Predict dependencies of a (possibly partial) function");
  pred_cmd->add_option("file", o.input, "C source file")->required()->check(CLI::ExistingFile);
  pred_cmd->add_option("--checkpoint", o.checkpoint)->required()->check(CLI::ExistingFile);
  pred_cmd->add_option("--tokenizer", o.tokenizer)->required();
  pred_cmd->add_option("--threshold", o.threshold)->capture_default_str();
  pred_cmd->add_option("-o,--out", o.output, "Output file (default stdout)");

  auto* bench_cmd = app.add_subcommand("bench", "Mean prediction latency per function, batch size 1");
  bench_cmd->add_option("--checkpoint", o.checkpoint)->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--tokenizer", o.tokenizer)->required();
  bench_cmd->add_option("--test", o.test, "Examples (JSONL) whose sources are timed")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--threshold", o.threshold)->capture_default_str();
  bench_cmd->add_option("--warmup", o.warmup, "Leading functions excluded from timing")->capture_default_str();
  bench_cmd->add_option("--json", o.json_out, "Also write the report as JSON");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  spdlog::set_level(spdlog::level::from_str(log_level));
  try {
    if (lex_cmd->parsed()) return cmd_lex(o, out);
    if (parse_cmd->parsed()) return cmd_parse(o, out);
    if (pdg_cmd->parsed()) return cmd_pdg(o, out);
    if (gen_cmd->parsed()) return cmd_gen_corpus(o, out);
    if (tok_cmd->parsed()) return cmd_tokenizer_train(o, out);
    if (ds_cmd->parsed()) return cmd_dataset_build(o, out);
    if (pt_cmd->parsed()) return cmd_pretrain(o, out);
    if (eval_cmd->parsed()) return cmd_eval(o, out);
    if (pred_cmd->parsed()) return cmd_predict(o, out);
    if (bench_cmd->parsed()) return cmd_bench(o, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace pdlab::harness
