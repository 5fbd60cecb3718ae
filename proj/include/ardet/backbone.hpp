#pragma once

#include <map>

#include "ardet/model_config.hpp"
#include "ardet/params.hpp"
#include "ardet/tape.hpp"

namespace ardet {

// Stride-indexed feature set C^k of one phase. Level i sits at downsampling
// factor 2^(i-1); the level range is contiguous.
struct FeaturePyramid {
  int phase = 0;
  std::map<int, TensorPtr> levels;

  const TensorPtr& level(int i) const {
    auto it = levels.find(i);
    if (it == levels.end())
      throw std::out_of_range("feature pyramid of phase " + std::to_string(phase) +
                              " is missing level " + std::to_string(i));
    return it->second;
  }
};

// Toy phase-1 extractor: two 3x3 conv+relu per stride block with 2x2 max
// pooling between blocks. Levels 3..5 are exposed downstream.
void backbone_init(ParamStore& params, const ModelConfig& cfg, Rng& rng);
FeaturePyramid backbone_forward(Tape& tape, const TensorPtr& image, const ParamStore& params,
                                const ModelConfig& cfg);

}  // namespace ardet
