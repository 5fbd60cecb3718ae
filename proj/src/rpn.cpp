#include "ardet/rpn.hpp"

#include <stdexcept>

#include "ardet/ops.hpp"

namespace ardet {

namespace {

std::string pname(int phase, const std::string& tail) {
  return "p" + std::to_string(phase) + "." + tail;
}

bool phase_predicts(const ModelConfig& cfg, int phase) {
  return cfg.autoregressive || phase == cfg.num_phases;
}

// Prediction layers start near zero so that initial scores sit at 0.5 and
// early updates stay small; the PFE trunk keeps the fan-in init.
constexpr double kHeadSigma = 0.01;

void create_head(ParamStore& params, const ModelConfig& cfg, int phase, int in_c, Rng& rng) {
  const int A = cfg.num_anchors();
  auto fw = params.create(pname(phase, "pfe.w"), {cfg.pfe_width, in_c, 3, 3});
  init_he_uniform(*fw, in_c * 9, rng);
  params.create(pname(phase, "pfe.b"), {cfg.pfe_width});
  auto cw = params.create(pname(phase, "cls.w"), {2 * A, cfg.pfe_width, 1, 1});
  init_normal(*cw, kHeadSigma, rng);
  params.create(pname(phase, "cls.b"), {2 * A});
}

}  // namespace

void rpn_init(ParamStore& params, const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  backbone_init(params, cfg, rng);
  for (int k = 2; k <= cfg.num_phases; ++k) de_encoder_init(params, cfg, k, rng);
  const int A = cfg.num_anchors();
  for (int k = 1; k <= cfg.num_phases; ++k) {
    if (!phase_predicts(cfg, k)) continue;
    int in_c = cfg.phase_width(k, 5);
    if (cfg.autoregressive && k > 1) in_c += 2 * A;
    create_head(params, cfg, k, in_c, rng);
  }
  auto bw = params.create(pname(cfg.num_phases, "bbox.w"), {4 * A, cfg.pfe_width, 1, 1});
  init_normal(*bw, kHeadSigma, rng);
  params.create(pname(cfg.num_phases, "bbox.b"), {4 * A});
  if (cfg.num_phases >= 2) {
    // Segmentation heads attach to the first top-down pathway (phase 2).
    const int t = cfg.stack(2).target_stride;
    for (int i = t; i <= 5; ++i) {
      const int c = cfg.phase_width(2, i);
      auto sw = params.create(pname(2, "seg" + std::to_string(i) + ".w"), {2, c, 1, 1});
      init_normal(*sw, kHeadSigma, rng);
      params.create(pname(2, "seg" + std::to_string(i) + ".b"), {2});
    }
  }
}

std::pair<TensorPtr, TensorPtr> phase_predict(Tape& tape, const TensorPtr& prev_logits,
                                              const TensorPtr& top_feature,
                                              const ParamStore& params, const ModelConfig& cfg,
                                              int phase) {
  if ((phase == 1) != (prev_logits == nullptr))
    throw std::invalid_argument("phase_predict: previous logits must be given exactly for phases > 1");
  TensorPtr in = top_feature;
  if (prev_logits) {
    if (prev_logits->dim(2) != top_feature->dim(2) || prev_logits->dim(3) != top_feature->dim(3))
      throw std::invalid_argument("phase_predict: previous logits extent " +
                                  shape_str(prev_logits->shape) +
                                  " does not match the top feature " + shape_str(top_feature->shape));
    in = ops::concat_channels(tape, {prev_logits, top_feature});
  }
  auto f = ops::relu(tape, ops::conv2d(tape, in, params.get(pname(phase, "pfe.w")),
                                       params.get(pname(phase, "pfe.b")), 1, 1));
  auto p = ops::conv2d(tape, f, params.get(pname(phase, "cls.w")),
                       params.get(pname(phase, "cls.b")), 1, 0);
  return {p, f};
}

PhaseOutputs rpn_forward(Tape& tape, const TensorPtr& image, const ParamStore& params,
                         const ModelConfig& cfg, bool training) {
  PhaseOutputs out;
  out.cls_logits.resize(cfg.num_phases);
  out.pfe.resize(cfg.num_phases);

  FeaturePyramid pyr = backbone_forward(tape, image, params, cfg);
  std::map<int, TensorPtr> first_top_down;
  TensorPtr prev_logits;
  for (int k = 1; k <= cfg.num_phases; ++k) {
    if (k >= 2) {
      DeEncoderOut de = de_encode(tape, pyr, cfg, k, params, training);
      pyr = de.pyramid;
      if (k == 2) first_top_down = de.decoded;
    }
    if (phase_predicts(cfg, k)) {
      auto [p, f] = phase_predict(tape, cfg.autoregressive ? prev_logits : nullptr,
                                  pyr.level(5), params, cfg, k);
      out.cls_logits[k - 1] = p;
      out.pfe[k - 1] = f;
      prev_logits = p;
    }
    out.pyramids.push_back(pyr);
  }

  out.bbox = ops::conv2d(tape, out.pfe[cfg.num_phases - 1],
                         params.get(pname(cfg.num_phases, "bbox.w")),
                         params.get(pname(cfg.num_phases, "bbox.b")), 1, 0);

  if (training && cfg.num_phases >= 2) {
    for (const auto& [level, d] : first_top_down) {
      out.seg[level] = ops::conv2d(tape, d, params.get(pname(2, "seg" + std::to_string(level) + ".w")),
                                   params.get(pname(2, "seg" + std::to_string(level) + ".b")), 1, 0);
    }
  }
  return out;
}

RpnTargets make_rpn_targets(const ModelConfig& cfg, const AnchorGrid& anchors,
                            const std::vector<Box>& gts) {
  RpnTargets t;
  const int A = anchors.num_shapes();
  const int rows = anchors.rows, cols = anchors.cols;

  auto labels_to_tensors = [&](const LabelAssignment& la) {
    auto lab = Tensor::make({1, A, rows, cols});
    TensorPtr wgt;
    double fg_w = 1.0, bg_w = 1.0;
    if (cfg.class_balance && la.foreground_count > 0 && la.background_count > 0) {
      const double valid = la.foreground_count + la.background_count;
      fg_w = valid / (2.0 * la.foreground_count);
      bg_w = valid / (2.0 * la.background_count);
      wgt = Tensor::make({1, A, rows, cols});
    }
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        for (int a = 0; a < A; ++a) {
          const int i = anchors.index_of(r, c, a);
          double v = -1.0;
          if (la.labels[i] == AnchorLabel::Foreground)
            v = 1.0;
          else if (la.labels[i] == AnchorLabel::Background)
            v = 0.0;
          lab->at4(0, a, r, c) = v;
          if (wgt) wgt->at4(0, a, r, c) = v < 0.0 ? 0.0 : (v > 0.0 ? fg_w : bg_w);
        }
    return std::make_pair(lab, wgt);
  };

  for (int k = 1; k <= cfg.num_phases; ++k) {
    const auto la = assign_labels(anchors, gts, cfg.policies[k - 1], cfg.bg_ceiling,
                                  cfg.force_best_match);
    auto [lab, wgt] = labels_to_tensors(la);
    t.cls_labels.push_back(lab);
    t.cls_weights.push_back(wgt);
  }

  const double hb = cfg.bbox_h > 0.0 ? cfg.bbox_h : cfg.policies.back();
  const auto la = assign_labels(anchors, gts, hb, cfg.bg_ceiling, cfg.force_best_match);
  t.bbox_targets = Tensor::make({1, 4 * A, rows, cols});
  t.bbox_weights = Tensor::make({1, 4 * A, rows, cols});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      for (int a = 0; a < A; ++a) {
        const int i = anchors.index_of(r, c, a);
        if (la.labels[i] != AnchorLabel::Foreground) continue;
        const BoxTransform bt = compute_transform(anchors.boxes[i], gts[la.match[i]]);
        const double vals[4] = {bt.tx, bt.ty, bt.tw, bt.th};
        for (int d = 0; d < 4; ++d) {
          t.bbox_targets->at4(0, 4 * a + d, r, c) = vals[d];
          t.bbox_weights->at4(0, 4 * a + d, r, c) = 1.0;
        }
      }

  if (cfg.num_phases >= 2) {
    const int t2 = cfg.stack(2).target_stride;
    for (int level = t2; level <= 5; ++level) {
      const int ext = cfg.image_size / (1 << (level - 1));
      auto m = seg_targets(gts, level, ext, ext);
      auto st = Tensor::make({1, 1, ext, ext});
      st->data = std::move(m);
      t.seg_labels[level] = st;
    }
  }
  return t;
}

RpnLossTerms rpn_loss(Tape& tape, const PhaseOutputs& outputs, const RpnTargets& targets,
                      const ModelConfig& cfg) {
  if (outputs.cls_logits.size() != targets.cls_labels.size())
    throw std::invalid_argument("rpn_loss: outputs and targets disagree on the phase count");
  RpnLossTerms terms;
  terms.cls.resize(outputs.cls_logits.size());
  TensorPtr total;
  auto accumulate = [&](const TensorPtr& term, double lambda) {
    auto weighted = ops::scale(tape, term, lambda);
    total = total ? ops::add(tape, total, weighted) : weighted;
  };

  for (std::size_t k = 0; k < outputs.cls_logits.size(); ++k) {
    if (!outputs.cls_logits[k]) continue;
    terms.cls[k] = ops::softmax_ce(tape, outputs.cls_logits[k], targets.cls_labels[k],
                                   targets.cls_weights[k], 2);
    accumulate(terms.cls[k], cfg.lambda_cls[k]);
  }

  terms.bbox = ops::smooth_l1(tape, outputs.bbox, targets.bbox_targets, targets.bbox_weights);
  accumulate(terms.bbox, cfg.lambda_bbox);

  for (const auto& [level, logits] : outputs.seg) {
    auto it = targets.seg_labels.find(level);
    if (it == targets.seg_labels.end())
      throw std::invalid_argument("rpn_loss: no segmentation target for stride level " +
                                  std::to_string(level));
    auto term = ops::softmax_ce(tape, logits, it->second, nullptr, 2);
    terms.seg = terms.seg ? ops::add(tape, terms.seg, term) : term;
  }
  if (terms.seg) accumulate(terms.seg, cfg.lambda_seg);

  terms.total = total;
  return terms;
}

}  // namespace ardet
