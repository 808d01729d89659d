#pragma once

#include "pdlab/analysis/dependence.hpp"
#include "pdlab/tokenizer/bpe.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace pdlab {

using IndexPair = std::pair<int, int>;

/// Truncation limits applied when turning a function into model input.
struct ExampleLimits {
  std::size_t max_seq_len = 256;  // subtokens including [CLS]
  std::size_t max_nodes = 50;     // m^c
};

/// One function prepared for pre-training or evaluation.
///
/// `gc` holds (i, j) over PDG node indices with node j control-dependent on
/// node i; `gd` holds (x, y) over subtoken indices with token y data-dependent
/// on token x. Both are sorted and duplicate-free.
struct TrainingExample {
  std::string id;
  std::string source;
  SubTokenSequence tokens;
  std::vector<Span> node_spans;
  std::vector<std::vector<int>> node_members;
  std::vector<IndexPair> gc;
  std::vector<IndexPair> gd;
  std::vector<std::uint8_t> ident_mask;

  std::size_t node_count() const { return node_spans.size(); }
  friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

/// Control pairs whose endpoints both fall below min(node_count, max_nodes).
std::vector<IndexPair> build_gc(const ControlDeps& control, std::size_t node_count,
                                std::size_t max_nodes);

/// Links the first subtoken of each definition occurrence to the first
/// subtoken of its use occurrence. Dependencies with a truncated endpoint
/// vanish.
std::vector<IndexPair> build_gd(const std::vector<OccurrenceDataDep>& deps,
                                const SubTokenSequence& subtokens);

/// Member subtoken indices of every node that survives token truncation.
/// A node survives when it starts before the last encoded byte; surviving
/// nodes without members raise EmptyNode. [CLS] is never a member.
std::vector<std::vector<int>> node_membership(const std::vector<PdgNodeSpan>& nodes,
                                              const SubTokenSequence& subtokens);

/// Identifier indicator per subtoken.
std::vector<std::uint8_t> identifier_mask(const SubTokenSequence& subtokens);

/// Complete-function example. Throws frontend errors and EmptyNode.
TrainingExample make_example(std::string id, std::string source, const BpeModel& model,
                             const ExampleLimits& limits);

/// Prefix of the first `k` PDG nodes (no brace repair) with ground truth
/// taken from the complete function and restricted to the prefix.
/// Throws TooShort when the function has fewer than `k` nodes.
TrainingExample make_partial(const std::string& id, const std::string& source, std::size_t k,
                             const BpeModel& model, const ExampleLimits& limits);

/// Number of lines that carry at least one code token.
std::size_t lines_of_code(std::string_view source);

// --- JSONL persistence -------------------------------------------------------

inline constexpr int kExampleSchemaVersion = 1;

nlohmann::ordered_json example_to_json(const TrainingExample& ex);
TrainingExample example_from_json(const nlohmann::json& j);

/// Writes a schema header line (carrying `provenance`) followed by one
/// example per line.
void write_examples(std::ostream& out, const std::vector<TrainingExample>& examples,
                    const nlohmann::ordered_json& provenance);

struct ExampleFile {
  nlohmann::json header;
  std::vector<TrainingExample> examples;
};

/// Throws DataError on a missing or mismatched header or malformed lines.
ExampleFile read_examples(std::istream& in);

}  // namespace pdlab
