#pragma once

#include <map>

#include "ardet/backbone.hpp"
#include "ardet/model_config.hpp"

namespace ardet {

// Stackable decoder-encoder module. The top-down pathway decodes the
// previous phase pyramid from the coarsest level down to the target stride
// (D_i = d_i(D_{i+1}) + L_i with L_i a 3x3 conv [+ BN] lateral); the
// bottom-up pathway re-encodes back up (E_i = e_i(E_{i-1}) + L'_i) with
// E_t = D_t shared. Re-sampling layers d/e change resolution and width in a
// single convolution; the two-step variant swaps them for a bilinear resize
// followed by a stride-1 convolution.
struct DeEncoderOut {
  FeaturePyramid pyramid;              // {E_t .. E_n}
  std::map<int, TensorPtr> decoded;    // {D_t .. D_n}
};

void de_encoder_init(ParamStore& params, const ModelConfig& cfg, int phase, Rng& rng);

std::map<int, TensorPtr> top_down(Tape& tape, const FeaturePyramid& prev, const ModelConfig& cfg,
                                  int phase, const ParamStore& params, bool train);
FeaturePyramid bottom_up(Tape& tape, const std::map<int, TensorPtr>& decoded,
                         const ModelConfig& cfg, int phase, const ParamStore& params, bool train);
DeEncoderOut de_encode(Tape& tape, const FeaturePyramid& prev, const ModelConfig& cfg, int phase,
                       const ParamStore& params, bool train);

}  // namespace ardet
