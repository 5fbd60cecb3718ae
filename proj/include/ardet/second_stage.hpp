#pragma once

#include <string>
#include <vector>

#include "ardet/params.hpp"
#include "ardet/tape.hpp"
#include "ardet/targets.hpp"

namespace ardet {

struct Proposal {
  Box box;
  double score = 0.0;  // final-phase foreground probability after decode
  int image_id = 0;
};

// Keeps proposals with score >= z, order preserved. Idempotent.
std::vector<Proposal> hard_suppress(const std::vector<Proposal>& proposals, double z);

enum class FusionMode { Geometric, Product, Mean };

FusionMode fusion_from_string(const std::string& s);

// Symmetric, monotone in both arguments, bounded in [0, 1].
double fuse_scores(double rpn_score, double rcnn_score, FusionMode mode);

struct RcnnConfig {
  int crop_size = 32;
  double z = 0.005;
  double fg_iou = 0.7;
  bool height_weighting = false;
  FusionMode fusion = FusionMode::Geometric;

  int seg_grid() const { return crop_size / 8; }  // after three 2x pools
};

// Crop classifier: three conv+pool blocks, then two affine layers; a 1x1
// segmentation head rides on the last convolutional feature map.
void rcnn_init(ParamStore& params, const RcnnConfig& cfg, Rng& rng);

struct RcnnOutputs {
  TensorPtr cls_logits;  // (B, 2)
  TensorPtr seg_logits;  // (B, 2, g, g)
};

RcnnOutputs rcnn_forward(Tape& tape, const TensorPtr& crops, const ParamStore& params);

// Foreground probabilities for a crop batch (inference path).
std::vector<double> rcnn_scores(const ParamStore& params, const TensorPtr& crops);

// Bilinear resample of the proposal region to a square crop. image is
// (1, 3, H, W) or (3, H, W); the result is (3, crop, crop).
TensorPtr extract_crop(const Tensor& image, const Box& box, int crop_size);

// Weighted cross-entropy over surviving proposals plus the weak
// segmentation term. Proposals with rpn_score < z are excluded from both
// terms and receive exactly zero gradient.
TensorPtr rcnn_loss(Tape& tape, const RcnnOutputs& outputs, const std::vector<int>& labels,
                    const std::vector<double>& weights, const TensorPtr& seg_labels,
                    const std::vector<double>& rpn_scores, double z);

// Height-sensitive weight: 1 + min(box height / image height, 1).
double height_weight(const Box& box, int image_height);

}  // namespace ardet
