#include "pdlab/neural/mlm.hpp"

#include "pdlab/common/error.hpp"
#include "pdlab/tokenizer/bpe.hpp"

namespace pdlab::nn {

MlmCorruption mlm_corrupt(const std::vector<int>& ids, std::size_t vocab_size, Rng& rng, double rate) {
  const auto first_ordinary = static_cast<std::size_t>(BpeModel::kSpecialCount);
  if (vocab_size <= first_ordinary) throw ConfigError("vocabulary has no ordinary tokens");
  MlmCorruption out;
  out.ids = ids;
  for (std::size_t i = 1; i < ids.size(); ++i) {
    if (!rng.chance(rate)) continue;
    out.positions.push_back(static_cast<int>(i));
    out.targets.push_back(ids[i]);
    const double u = rng.uniform();
    if (u < 0.8) {
      out.ids[i] = BpeModel::kMask;
      out.actions.push_back(MaskAction::Mask);
    } else if (u < 0.9) {
      out.ids[i] = static_cast<int>(first_ordinary + rng.below(vocab_size - first_ordinary));
      out.actions.push_back(MaskAction::Random);
    } else {
      out.actions.push_back(MaskAction::Keep);
    }
  }
  return out;
}

}  // namespace pdlab::nn
