#include "pdlab/dataset/example.hpp"

#include "pdlab/common/error.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>

namespace pdlab {

std::vector<IndexPair> build_gc(const ControlDeps& control, std::size_t node_count,
                                std::size_t max_nodes) {
  const auto limit = static_cast<int>(std::min(node_count, max_nodes));
  std::vector<IndexPair> out;
  for (auto [i, j] : control.pairs)
    if (i < limit && j < limit) out.emplace_back(i, j);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

int first_overlapping(const SubTokenSequence& seq, Span span) {
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const Span& s = seq.spans[i];
    if (!s.empty() && s.overlaps(span)) return static_cast<int>(i);
    if (s.begin >= span.end && !s.empty()) break;
  }
  return -1;
}

}  // namespace

std::vector<IndexPair> build_gd(const std::vector<OccurrenceDataDep>& deps,
                                const SubTokenSequence& subtokens) {
  std::set<IndexPair> pairs;
  for (const OccurrenceDataDep& d : deps) {
    int x = first_overlapping(subtokens, d.def_span);
    int y = first_overlapping(subtokens, d.use_span);
    if (x > 0 && y > 0) pairs.emplace(x, y);
  }
  return {pairs.begin(), pairs.end()};
}

std::vector<std::vector<int>> node_membership(const std::vector<PdgNodeSpan>& nodes,
                                              const SubTokenSequence& subtokens) {
  std::size_t covered_end = 0;
  for (std::size_t i = 1; i < subtokens.size(); ++i)
    covered_end = std::max(covered_end, subtokens.spans[i].end);
  std::vector<std::vector<int>> members;
  for (const PdgNodeSpan& node : nodes) {
    if (node.span.begin >= covered_end) break;
    std::vector<int> m;
    for (std::size_t i = 1; i < subtokens.size(); ++i) {
      const Span& s = subtokens.spans[i];
      if (!s.empty() && s.overlaps(node.span)) m.push_back(static_cast<int>(i));
    }
    if (m.empty()) throw EmptyNode(static_cast<std::size_t>(node.index));
    members.push_back(std::move(m));
  }
  return members;
}

std::vector<std::uint8_t> identifier_mask(const SubTokenSequence& subtokens) {
  std::vector<std::uint8_t> mask(subtokens.size(), 0);
  for (std::size_t i = 0; i < subtokens.size(); ++i)
    mask[i] = subtokens.kinds[i] == static_cast<int>(TokenKind::Identifier) ? 1 : 0;
  return mask;
}

namespace {

TrainingExample assemble(std::string id, std::string source, const std::vector<CodeToken>& tokens,
                         const std::vector<PdgNodeSpan>& nodes, const ControlDeps& control,
                         const std::vector<OccurrenceDataDep>& deps, const BpeModel& model,
                         const ExampleLimits& limits) {
  TrainingExample ex;
  ex.id = std::move(id);
  ex.tokens = encode(model, source, tokens, limits.max_seq_len);
  auto members = node_membership(nodes, ex.tokens);
  const std::size_t node_count = std::min(members.size(), limits.max_nodes);
  members.resize(node_count);
  ex.node_members = std::move(members);
  for (std::size_t k = 0; k < node_count; ++k) ex.node_spans.push_back(nodes[k].span);
  ex.gc = build_gc(control, node_count, limits.max_nodes);
  std::vector<OccurrenceDataDep> kept;
  const auto limit = static_cast<int>(node_count);
  for (const OccurrenceDataDep& d : deps)
    if (d.def_stmt < limit && d.use_stmt < limit) kept.push_back(d);
  ex.gd = build_gd(kept, ex.tokens);
  ex.ident_mask = identifier_mask(ex.tokens);
  ex.source = std::move(source);
  return ex;
}

}  // namespace

TrainingExample make_example(std::string id, std::string source, const BpeModel& model,
                             const ExampleLimits& limits) {
  FunctionAnalysis fa = analyze(source);
  ControlDeps control{fa.pdg.control};
  return assemble(std::move(id), std::move(source), fa.tokens, fa.nodes, control, fa.pdg.data,
                  model, limits);
}

TrainingExample make_partial(const std::string& id, const std::string& source, std::size_t k,
                             const BpeModel& model, const ExampleLimits& limits) {
  FunctionAnalysis fa = analyze(source);
  if (fa.nodes.size() < k || k == 0) throw TooShort(fa.nodes.size(), k);
  const std::size_t cut = fa.nodes[k - 1].span.end;
  std::string prefix = source.substr(0, cut);
  std::vector<CodeToken> tokens = lex(prefix);
  std::vector<PdgNodeSpan> nodes(fa.nodes.begin(), fa.nodes.begin() + static_cast<long>(k));
  ControlDeps control;
  const auto limit = static_cast<int>(k);
  for (auto [i, j] : fa.pdg.control)
    if (i < limit && j < limit) control.pairs.emplace_back(i, j);
  std::vector<OccurrenceDataDep> deps;
  for (const OccurrenceDataDep& d : fa.pdg.data)
    if (d.def_stmt < limit && d.use_stmt < limit) deps.push_back(d);
  return assemble(id + "#k" + std::to_string(k), std::move(prefix), tokens, nodes, control, deps,
                  model, limits);
}

std::size_t lines_of_code(std::string_view source) {
  std::vector<CodeToken> tokens = lex(source);
  std::set<std::size_t> lines;
  std::size_t line = 0;
  std::size_t pos = 0;
  for (const CodeToken& t : tokens) {
    line += static_cast<std::size_t>(std::count(source.begin() + static_cast<long>(pos),
                                                source.begin() + static_cast<long>(t.span.begin), '\n'));
    pos = t.span.begin;
    lines.insert(line);
  }
  return lines.size();
}

// --- JSONL ------------------------------------------------------------------

nlohmann::ordered_json example_to_json(const TrainingExample& ex) {
  using json = nlohmann::ordered_json;
  auto spans = [](const std::vector<Span>& v) {
    json a = json::array();
    for (const Span& s : v) a.push_back({s.begin, s.end});
    return a;
  };
  auto pairs = [](const std::vector<IndexPair>& v) {
    json a = json::array();
    for (auto [x, y] : v) a.push_back({x, y});
    return a;
  };
  json j;
  j["id"] = ex.id;
  j["source"] = ex.source;
  j["ids"] = ex.tokens.ids;
  j["spans"] = spans(ex.tokens.spans);
  j["kinds"] = ex.tokens.kinds;
  j["node_spans"] = spans(ex.node_spans);
  j["node_members"] = ex.node_members;
  j["gc"] = pairs(ex.gc);
  j["gd"] = pairs(ex.gd);
  j["ident_mask"] = ex.ident_mask;
  return j;
}

TrainingExample example_from_json(const nlohmann::json& j) {
  auto spans = [](const nlohmann::json& a) {
    std::vector<Span> v;
    for (const auto& s : a) v.push_back(Span{s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
    return v;
  };
  auto pairs = [](const nlohmann::json& a) {
    std::vector<IndexPair> v;
    for (const auto& p : a) v.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
    return v;
  };
  try {
    TrainingExample ex;
    ex.id = j.at("id").get<std::string>();
    ex.source = j.at("source").get<std::string>();
    ex.tokens.ids = j.at("ids").get<std::vector<int>>();
    ex.tokens.spans = spans(j.at("spans"));
    ex.tokens.kinds = j.at("kinds").get<std::vector<int>>();
    ex.node_spans = spans(j.at("node_spans"));
    ex.node_members = j.at("node_members").get<std::vector<std::vector<int>>>();
    ex.gc = pairs(j.at("gc"));
    ex.gd = pairs(j.at("gd"));
    ex.ident_mask = j.at("ident_mask").get<std::vector<std::uint8_t>>();
    if (ex.tokens.spans.size() != ex.tokens.ids.size() ||
        ex.tokens.kinds.size() != ex.tokens.ids.size() ||
        ex.ident_mask.size() != ex.tokens.ids.size() ||
        ex.node_members.size() != ex.node_spans.size())
      throw DataError("example " + ex.id + ": inconsistent field lengths");
    return ex;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed example: ") + e.what());
  }
}

void write_examples(std::ostream& out, const std::vector<TrainingExample>& examples,
                    const nlohmann::ordered_json& provenance) {
  nlohmann::ordered_json header;
  header["schema"] = "pdlab.training_example";
  header["version"] = kExampleSchemaVersion;
  header["fields"] = {"id", "source", "ids", "spans", "kinds", "node_spans", "node_members",
                      "gc", "gd", "ident_mask"};
  header["provenance"] = provenance;
  out << header.dump() << '\n';
  for (const TrainingExample& ex : examples) out << example_to_json(ex).dump() << '\n';
}

ExampleFile read_examples(std::istream& in) {
  ExampleFile file;
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty example file");
  try {
    file.header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad example header: ") + e.what());
  }
  if (file.header.value("schema", "") != "pdlab.training_example" ||
      file.header.value("version", 0) != kExampleSchemaVersion)
    throw DataError("unsupported example schema");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("bad example line: ") + e.what());
    }
    file.examples.push_back(example_from_json(j));
  }
  return file;
}

}  // namespace pdlab
