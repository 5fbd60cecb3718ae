#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ardet/model_config.hpp"

namespace ardet {

// Analytic multiply-accumulate accounting of one inference forward pass
// (batch 1). Convolution-family layers only: plain, strided, 1x1 and
// fractionally strided convolutions; normalization, activations, pooling and
// bilinear resizes carry no counted MACs. Matches instrumented tap counting
// of the reference kernels exactly.
struct MacReport {
  struct Layer {
    std::string name;
    std::uint64_t macs;
  };
  std::vector<Layer> layers;
  std::uint64_t total = 0;
};

MacReport count_macs(const ModelConfig& cfg, int img_w, int img_h);

}  // namespace ardet
