#include "ardet/second_stage.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ardet/ops.hpp"

namespace ardet {

std::vector<Proposal> hard_suppress(const std::vector<Proposal>& proposals, double z) {
  if (!(z >= 0.0 && z < 1.0)) throw std::invalid_argument("suppression threshold must be in [0, 1)");
  std::vector<Proposal> kept;
  kept.reserve(proposals.size());
  for (const Proposal& p : proposals)
    if (p.score >= z) kept.push_back(p);
  return kept;
}

FusionMode fusion_from_string(const std::string& s) {
  if (s == "geo") return FusionMode::Geometric;
  if (s == "prod") return FusionMode::Product;
  if (s == "mean") return FusionMode::Mean;
  throw std::invalid_argument("unknown fusion mode '" + s + "' (expected geo|prod|mean)");
}

double fuse_scores(double rpn_score, double rcnn_score, FusionMode mode) {
  switch (mode) {
    case FusionMode::Geometric:
      return std::sqrt(rpn_score * rcnn_score);
    case FusionMode::Product:
      return rpn_score * rcnn_score;
    case FusionMode::Mean:
      return 0.5 * (rpn_score + rcnn_score);
  }
  return 0.0;
}

void rcnn_init(ParamStore& params, const RcnnConfig& cfg, Rng& rng) {
  if (cfg.crop_size % 8 != 0) throw std::invalid_argument("rcnn crop size must be a multiple of 8");
  const int widths[4] = {3, 16, 32, 64};
  for (int blk = 1; blk <= 3; ++blk) {
    const int ic = widths[blk - 1], oc = widths[blk];
    auto w = params.create("rcnn.c" + std::to_string(blk) + ".w", {oc, ic, 3, 3});
    init_he_uniform(*w, ic * 9, rng);
    params.create("rcnn.c" + std::to_string(blk) + ".b", {oc});
  }
  // Prediction layers start near zero, as in the proposal network heads.
  auto sw = params.create("rcnn.seg.w", {2, 64, 1, 1});
  init_normal(*sw, 0.01, rng);
  params.create("rcnn.seg.b", {2});
  const int g = cfg.seg_grid();
  const int feat = 64 * g * g;
  auto f1 = params.create("rcnn.fc1.w", {64, feat});
  init_he_uniform(*f1, feat, rng);
  params.create("rcnn.fc1.b", {64});
  auto f2 = params.create("rcnn.fc2.w", {2, 64});
  init_normal(*f2, 0.01, rng);
  params.create("rcnn.fc2.b", {2});
}

RcnnOutputs rcnn_forward(Tape& tape, const TensorPtr& crops, const ParamStore& params) {
  if (!crops || crops->ndim() != 4 || crops->dim(1) != 3 || crops->dim(0) < 1)
    throw std::invalid_argument("rcnn expects a non-empty (B, 3, S, S) crop batch");
  TensorPtr x = crops;
  for (int blk = 1; blk <= 3; ++blk) {
    x = ops::conv2d(tape, x, params.get("rcnn.c" + std::to_string(blk) + ".w"),
                    params.get("rcnn.c" + std::to_string(blk) + ".b"), 1, 1);
    x = ops::relu(tape, x);
    x = ops::maxpool2x2(tape, x);
  }
  RcnnOutputs out;
  out.seg_logits = ops::conv2d(tape, x, params.get("rcnn.seg.w"), params.get("rcnn.seg.b"), 1, 0);
  const int B = x->dim(0);
  const int feat = x->dim(1) * x->dim(2) * x->dim(3);
  auto flat = ops::reshape(tape, x, {B, feat});
  auto h = ops::relu(tape, ops::linear(tape, flat, params.get("rcnn.fc1.w"), params.get("rcnn.fc1.b")));
  out.cls_logits = ops::linear(tape, h, params.get("rcnn.fc2.w"), params.get("rcnn.fc2.b"));
  return out;
}

std::vector<double> rcnn_scores(const ParamStore& params, const TensorPtr& crops) {
  if (!crops || crops->dim(0) == 0) return {};
  Tape tape(false);
  const auto out = rcnn_forward(tape, crops, params);
  const int B = out.cls_logits->dim(0);
  std::vector<double> scores(static_cast<std::size_t>(B));
  for (int i = 0; i < B; ++i) {
    const double bg = out.cls_logits->data[static_cast<std::size_t>(i) * 2];
    const double fg = out.cls_logits->data[static_cast<std::size_t>(i) * 2 + 1];
    const double m = std::max(bg, fg);
    scores[static_cast<std::size_t>(i)] = std::exp(fg - m) / (std::exp(bg - m) + std::exp(fg - m));
  }
  return scores;
}

TensorPtr extract_crop(const Tensor& image, const Box& box, int crop_size) {
  if (image.ndim() != 3 && image.ndim() != 4)
    throw std::invalid_argument("extract_crop expects a (3, H, W) or (1, 3, H, W) image");
  const bool batched = image.ndim() == 4;
  if ((batched ? image.dim(1) : image.dim(0)) != 3)
    throw std::invalid_argument("extract_crop expects a 3-channel image");
  const int H = batched ? image.dim(2) : image.dim(1);
  const int W = batched ? image.dim(3) : image.dim(2);
  if (box.width() <= 0.0 || box.height() <= 0.0)
    throw std::invalid_argument("extract_crop: degenerate box");
  auto crop = Tensor::make({3, crop_size, crop_size});
  auto pixel = [&](int c, int y, int x) {
    return batched ? image.at4(0, c, y, x)
                   : image.data[(static_cast<std::size_t>(c) * H + y) * W + x];
  };
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < crop_size; ++i)
      for (int j = 0; j < crop_size; ++j) {
        const double sx = box.x1 + (j + 0.5) * box.width() / crop_size - 0.5;
        const double sy = box.y1 + (i + 0.5) * box.height() / crop_size - 0.5;
        const double cx = std::clamp(sx, 0.0, static_cast<double>(W - 1));
        const double cy = std::clamp(sy, 0.0, static_cast<double>(H - 1));
        const int x0 = static_cast<int>(cx), y0 = static_cast<int>(cy);
        const int x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
        const double fx = cx - x0, fy = cy - y0;
        crop->data[(static_cast<std::size_t>(c) * crop_size + i) * crop_size + j] =
            (1.0 - fy) * ((1.0 - fx) * pixel(c, y0, x0) + fx * pixel(c, y0, x1)) +
            fy * ((1.0 - fx) * pixel(c, y1, x0) + fx * pixel(c, y1, x1));
      }
  return crop;
}

TensorPtr rcnn_loss(Tape& tape, const RcnnOutputs& outputs, const std::vector<int>& labels,
                    const std::vector<double>& weights, const TensorPtr& seg_labels,
                    const std::vector<double>& rpn_scores, double z) {
  const int B = outputs.cls_logits->dim(0);
  if (static_cast<int>(labels.size()) != B || static_cast<int>(weights.size()) != B ||
      static_cast<int>(rpn_scores.size()) != B)
    throw std::invalid_argument("rcnn_loss: per-proposal inputs must match the batch extent");

  auto lab = Tensor::make({B, 1, 1, 1});
  auto wgt = Tensor::make({B, 1, 1, 1});
  for (int i = 0; i < B; ++i) {
    const bool survives = rpn_scores[static_cast<std::size_t>(i)] >= z;
    lab->data[static_cast<std::size_t>(i)] =
        survives ? static_cast<double>(labels[static_cast<std::size_t>(i)]) : -1.0;
    wgt->data[static_cast<std::size_t>(i)] = weights[static_cast<std::size_t>(i)];
  }
  auto logits4 = ops::reshape(tape, outputs.cls_logits, {B, 2, 1, 1});
  auto cls_term = ops::softmax_ce(tape, logits4, lab, wgt, 2);

  // Suppressed proposals are also excluded from the segmentation term.
  const int g = outputs.seg_logits->dim(2);
  auto seg_lab = Tensor::make({B, 1, g, g});
  for (int i = 0; i < B; ++i)
    for (int r = 0; r < g; ++r)
      for (int c = 0; c < g; ++c)
        seg_lab->at4(i, 0, r, c) = rpn_scores[static_cast<std::size_t>(i)] >= z
                                       ? seg_labels->at4(i, 0, r, c)
                                       : -1.0;
  auto seg_term = ops::softmax_ce(tape, outputs.seg_logits, seg_lab, nullptr, 2);
  return ops::add(tape, cls_term, seg_term);
}

double height_weight(const Box& box, int image_height) {
  return 1.0 + std::min(box.height() / image_height, 1.0);
}

}  // namespace ardet
