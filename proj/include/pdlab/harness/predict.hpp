#pragma once

#include "pdlab/dataset/example.hpp"
#include "pdlab/neural/losses.hpp"
#include "pdlab/neural/model.hpp"

#include <string_view>
#include <vector>

namespace pdlab::harness {

/// Statement segmentation that needs only tokens: an optional function
/// header is skipped, `if`/`while`/`switch` conditions and the three parts of
/// a `for` header become nodes, and everything else is cut at top-level `;`.
/// Braces and `else` separate nodes without being part of one.
std::vector<PdgNodeSpan> fallback_segments(const std::vector<CodeToken>& tokens);

struct InferenceSegmentation {
  std::vector<CodeToken> tokens;
  std::vector<PdgNodeSpan> nodes;
  bool parsed = false;  // false when the fallback splitter was used
};

/// Parser segmentation when the source parses, the fallback otherwise.
/// Throws LexError only.
InferenceSegmentation segment_for_inference(std::string_view source);

/// Pairs (i, j) with clamped probs(i, j) > threshold, shifted by `offset`.
template <typename T>
std::vector<IndexPair> threshold_pairs(const nn::Matrix<T>& probs, double threshold, int offset = 0) {
  std::vector<IndexPair> out;
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    for (Eigen::Index j = 0; j < probs.cols(); ++j)
      if (static_cast<double>(nn::clamp_probability(probs(i, j))) > threshold)
        out.emplace_back(static_cast<int>(i) + offset, static_cast<int>(j) + offset);
  return out;
}

struct PredictedPdg {
  SubTokenSequence tokens;
  std::vector<PdgNodeSpan> nodes;  // nodes that reached the model
  std::vector<IndexPair> control;  // (i, j): node j control-dependent on node i
  std::vector<IndexPair> data;     // (x, y): subtoken y data-dependent on subtoken x
  bool parsed = false;
};

/// Both dependency graphs of already-encoded input. Data pairs range over
/// every subtoken pair except [CLS]; no identifier mask is applied.
template <typename T>
void predict_pairs(const nn::Model<T>& model, const std::vector<int>& ids,
                   const std::vector<std::vector<int>>& members, double threshold,
                   std::vector<IndexPair>& control, std::vector<IndexPair>& data) {
  auto p = model.predict(ids, members);
  control = members.empty() ? std::vector<IndexPair>{} : threshold_pairs(p.control, threshold);
  data = ids.size() < 2 ? std::vector<IndexPair>{} : threshold_pairs(p.data, threshold, 1);
}

/// Full inference from source text.
template <typename T>
PredictedPdg predict_dependencies(const nn::Model<T>& model, const BpeModel& bpe, std::string_view source,
                                  double threshold = 0.5) {
  InferenceSegmentation seg = segment_for_inference(source);
  PredictedPdg out;
  out.parsed = seg.parsed;
  out.tokens = encode(bpe, source, seg.tokens, model.config().max_seq_len);
  auto members = node_membership(seg.nodes, out.tokens);
  if (members.size() > model.config().m_c) members.resize(model.config().m_c);
  out.nodes.assign(seg.nodes.begin(), seg.nodes.begin() + static_cast<long>(members.size()));
  predict_pairs(model, out.tokens.ids, members, threshold, out.control, out.data);
  return out;
}

}  // namespace pdlab::harness
