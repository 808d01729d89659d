#pragma once

#include "pdlab/common/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pdlab::nn {

enum class MaskAction : std::uint8_t { Mask, Random, Keep };

struct MlmCorruption {
  std::vector<int> ids;          // model input after corruption
  std::vector<int> positions;    // selected positions, ascending
  std::vector<int> targets;      // original id at each selected position
  std::vector<MaskAction> actions;
};

/// Selects each position after [CLS] with probability `rate`; a selected
/// position becomes [MASK] 80% of the time, a uniformly random ordinary
/// token 10% of the time, and stays unchanged otherwise.
MlmCorruption mlm_corrupt(const std::vector<int>& ids, std::size_t vocab_size, Rng& rng, double rate = 0.15);

}  // namespace pdlab::nn
