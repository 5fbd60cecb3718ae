#pragma once

#include <map>
#include <vector>

#include "ardet/de_encoder.hpp"
#include "ardet/model_config.hpp"
#include "ardet/targets.hpp"

namespace ardet {

// Multi-phase autoregressive head. Phase k > 1 concatenates the previous
// phase prediction logits with its top encoded feature before the PFE layer;
// the final phase additionally emits the box regression map, and in training
// the strides of the first top-down pathway carry binary segmentation heads.
struct PhaseOutputs {
  // Indexed by phase - 1; entries are null for phases without prediction
  // layers (intermediate phases of the no-autoregressive variant).
  std::vector<TensorPtr> cls_logits;
  std::vector<TensorPtr> pfe;
  TensorPtr bbox;                     // (B, 4A, h5, w5), final phase only
  std::map<int, TensorPtr> seg;       // stride level -> (B, 2, h_i, w_i)
  std::vector<FeaturePyramid> pyramids;  // per phase, for analysis paths
};

void rpn_init(ParamStore& params, const ModelConfig& cfg, Rng& rng);

std::pair<TensorPtr, TensorPtr> phase_predict(Tape& tape, const TensorPtr& prev_logits,
                                              const TensorPtr& top_feature,
                                              const ParamStore& params, const ModelConfig& cfg,
                                              int phase);

PhaseOutputs rpn_forward(Tape& tape, const TensorPtr& image, const ParamStore& params,
                         const ModelConfig& cfg, bool training);

// Dense supervision for one image, aligned with PhaseOutputs.
struct RpnTargets {
  std::vector<TensorPtr> cls_labels;   // per phase, (1, A, h5, w5), values -1/0/1
  std::vector<TensorPtr> cls_weights;  // per phase, same shape (may be null)
  TensorPtr bbox_targets;              // (1, 4A, h5, w5)
  TensorPtr bbox_weights;              // 1 on foreground coordinates
  std::map<int, TensorPtr> seg_labels; // stride level -> (1, 1, h_i, w_i)
};

RpnTargets make_rpn_targets(const ModelConfig& cfg, const AnchorGrid& anchors,
                            const std::vector<Box>& gts);

struct RpnLossTerms {
  TensorPtr total;
  std::vector<TensorPtr> cls;  // per phase (null where no prediction layer)
  TensorPtr bbox;
  TensorPtr seg;  // summed over strides
};

RpnLossTerms rpn_loss(Tape& tape, const PhaseOutputs& outputs, const RpnTargets& targets,
                      const ModelConfig& cfg);

}  // namespace ardet
