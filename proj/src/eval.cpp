#include "ardet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "ardet/ops.hpp"

namespace ardet {

std::vector<Detection> decode_detections(const Tensor& cls_logits, const Tensor& bbox_map,
                                         const AnchorGrid& anchors, int img_w, int img_h,
                                         int image_id, int phase) {
  const int A = anchors.num_shapes();
  const int rows = anchors.rows, cols = anchors.cols;
  if (cls_logits.ndim() != 4 || cls_logits.dim(0) != 1 || cls_logits.dim(1) != 2 * A ||
      cls_logits.dim(2) != rows || cls_logits.dim(3) != cols)
    throw std::invalid_argument("decode: classification map " + shape_str(cls_logits.shape) +
                                " does not match the anchor grid");
  if (bbox_map.ndim() != 4 || bbox_map.dim(0) != 1 || bbox_map.dim(1) != 4 * A ||
      bbox_map.dim(2) != rows || bbox_map.dim(3) != cols)
    throw std::invalid_argument("decode: regression map " + shape_str(bbox_map.shape) +
                                " does not match the anchor grid");

  std::vector<Detection> dets;
  dets.reserve(static_cast<std::size_t>(anchors.count()));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      for (int a = 0; a < A; ++a) {
        const double bg = cls_logits.at4(0, 2 * a, r, c);
        const double fg = cls_logits.at4(0, 2 * a + 1, r, c);
        const double m = std::max(bg, fg);
        const double score = std::exp(fg - m) / (std::exp(bg - m) + std::exp(fg - m));
        const BoxTransform t{bbox_map.at4(0, 4 * a, r, c), bbox_map.at4(0, 4 * a + 1, r, c),
                             bbox_map.at4(0, 4 * a + 2, r, c), bbox_map.at4(0, 4 * a + 3, r, c)};
        Box b = apply_transform(anchors.boxes[anchors.index_of(r, c, a)], t);
        b.x1 = std::clamp(b.x1, 0.0, static_cast<double>(img_w));
        b.x2 = std::clamp(b.x2, 0.0, static_cast<double>(img_w));
        b.y1 = std::clamp(b.y1, 0.0, static_cast<double>(img_h));
        b.y2 = std::clamp(b.y2, 0.0, static_cast<double>(img_h));
        if (b.width() < 2.0 || b.height() < 2.0) continue;
        dets.push_back({b, score, image_id, phase});
      }
  return dets;
}

namespace {

std::vector<int> score_order(const std::vector<Detection>& dets) {
  std::vector<int> idx(dets.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return a < b;
  });
  return idx;
}

}  // namespace

std::vector<Detection> nms(const std::vector<Detection>& dets, double overlap_threshold) {
  if (!(overlap_threshold > 0.0 && overlap_threshold < 1.0))
    throw std::invalid_argument("nms overlap threshold must be in (0, 1)");
  const auto order = score_order(dets);
  std::vector<Detection> kept;
  for (int i : order) {
    bool suppressed = false;
    for (const Detection& k : kept)
      if (iou(dets[i].box, k.box) > overlap_threshold) {
        suppressed = true;
        break;
      }
    if (!suppressed) kept.push_back(dets[i]);
  }
  return kept;
}

namespace {

// Greedy matching of one image's detections against its ground truths;
// returns per-detection TP flags in the input order.
std::vector<bool> match_image(const std::vector<Detection>& dets, const std::vector<Box>& gts,
                              double match_iou) {
  std::vector<bool> tp(dets.size(), false);
  std::vector<bool> taken(gts.size(), false);
  for (int i : score_order(dets)) {
    double best = match_iou;
    int best_gt = -1;
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (taken[j]) continue;
      const double v = iou(dets[static_cast<std::size_t>(i)].box, gts[j]);
      if (v > best || (v == best && best_gt < 0 && v >= match_iou)) {
        best = v;
        best_gt = static_cast<int>(j);
      }
    }
    if (best_gt >= 0) {
      taken[static_cast<std::size_t>(best_gt)] = true;
      tp[static_cast<std::size_t>(i)] = true;
    }
  }
  return tp;
}

}  // namespace

EvalCurve evaluate(const std::vector<std::vector<Detection>>& dets_per_image,
                   const std::vector<std::vector<Box>>& gts_per_image, double fppi_lo,
                   double fppi_hi, double match_iou) {
  if (dets_per_image.size() != gts_per_image.size())
    throw std::invalid_argument("evaluate: detection and ground-truth image counts differ");
  if (!(fppi_lo > 0.0 && fppi_lo < fppi_hi))
    throw std::invalid_argument("evaluate: FPPI range must satisfy 0 < lo < hi");
  const int n_images = static_cast<int>(dets_per_image.size());

  EvalCurve curve;
  for (const auto& g : gts_per_image) curve.gt_count += static_cast<int>(g.size());
  if (curve.gt_count == 0) return curve;  // undefined miss rate
  curve.defined = true;

  struct Scored {
    double score;
    bool tp;
  };
  std::vector<Scored> all;
  for (std::size_t img = 0; img < dets_per_image.size(); ++img) {
    const auto tp = match_image(dets_per_image[img], gts_per_image[img], match_iou);
    for (std::size_t i = 0; i < tp.size(); ++i)
      all.push_back({dets_per_image[img][i].score, tp[i]});
  }
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });

  int tps = 0, fps = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].tp)
      ++tps;
    else
      ++fps;
    // Emit one point per distinct score threshold.
    if (i + 1 < all.size() && all[i + 1].score == all[i].score) continue;
    curve.points.emplace_back(static_cast<double>(fps) / n_images,
                              1.0 - static_cast<double>(tps) / curve.gt_count);
  }

  // Log-average miss rate over 9 points evenly spaced in log10 FPPI.
  const double llo = std::log10(fppi_lo), lhi = std::log10(fppi_hi);
  double log_sum = 0.0;
  bool any_zero = false;
  for (int j = 0; j < 9; ++j) {
    const double f = std::pow(10.0, llo + (lhi - llo) * j / 8.0);
    double mr = 1.0;
    if (!curve.points.empty()) {
      mr = curve.points.front().second;  // flat extrapolation below the lowest achieved FPPI
      for (const auto& [fppi, m] : curve.points) {
        if (fppi > f) break;
        mr = m;
      }
    }
    if (mr <= 0.0)
      any_zero = true;
    else
      log_sum += std::log(mr);
  }
  curve.log_avg_mr = any_zero ? 0.0 : std::exp(log_sum / 9.0);
  return curve;
}

double detection_recall(const std::vector<std::vector<Detection>>& dets_per_image,
                        const std::vector<std::vector<Box>>& gts_per_image, double match_iou) {
  if (dets_per_image.size() != gts_per_image.size())
    throw std::invalid_argument("recall: detection and ground-truth image counts differ");
  int matched = 0, total = 0;
  for (std::size_t img = 0; img < dets_per_image.size(); ++img) {
    total += static_cast<int>(gts_per_image[img].size());
    const auto tp = match_image(dets_per_image[img], gts_per_image[img], match_iou);
    for (bool t : tp) matched += t ? 1 : 0;
  }
  if (total == 0) throw std::invalid_argument("recall is undefined without ground truths");
  return static_cast<double>(matched) / total;
}

void write_curve(const std::filesystem::path& path, const EvalCurve& curve) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write curve: " + path.string());
  char line[96];
  for (const auto& [fppi, mr] : curve.points) {
    std::snprintf(line, sizeof line, "%.6g %.6g\n", fppi, mr);
    os << line;
  }
  if (curve.defined) {
    std::snprintf(line, sizeof line, "log_avg %.6g\n", curve.log_avg_mr);
    os << line;
  } else {
    os << "log_avg undefined\n";
  }
}

void write_detections(const std::filesystem::path& path, const std::vector<Detection>& dets) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write detections: " + path.string());
  char line[160];
  for (const Detection& d : dets) {
    std::snprintf(line, sizeof line, "%d %.6g %.6g %.6g %.6g %.6g\n", d.image_id, d.score, d.box.x1,
                  d.box.y1, d.box.x2, d.box.y2);
    os << line;
  }
}

ScoreMap foreground_max_map(const Tensor& cls_logits) {
  if (cls_logits.ndim() != 4 || cls_logits.dim(0) != 1 || cls_logits.dim(1) % 2)
    throw std::invalid_argument("foreground_max_map expects (1, 2A, h, w) logits");
  const auto probs = ops::softmax_pair_fg(std::make_shared<Tensor>(cls_logits));
  const int A = probs->dim(1), rows = probs->dim(2), cols = probs->dim(3);
  ScoreMap m;
  m.rows = rows;
  m.cols = cols;
  m.v.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double best = 0.0;
      for (int a = 0; a < A; ++a) best = std::max(best, probs->at4(0, a, r, c));
      m.v[static_cast<std::size_t>(r) * cols + c] = best;
    }
  return m;
}

std::vector<DisagreeCat> phase_disagreement(const ScoreMap& a, const ScoreMap& b, double threshold) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument("phase_disagreement: map extents differ");
  std::vector<DisagreeCat> out(a.v.size());
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    const bool fa = a.v[i] >= threshold;
    const bool fb = b.v[i] >= threshold;
    out[i] = fa && fb    ? DisagreeCat::AgreeFg
             : fa && !fb ? DisagreeCat::Suppressed
             : !fa && fb ? DisagreeCat::Emerged
                         : DisagreeCat::AgreeBg;
  }
  return out;
}

double sample_score_map(const ScoreMap& map, double x, double y, int stride) {
  const double u = std::clamp(x / stride - 0.5, 0.0, static_cast<double>(map.cols - 1));
  const double v = std::clamp(y / stride - 0.5, 0.0, static_cast<double>(map.rows - 1));
  const int c0 = static_cast<int>(u), r0 = static_cast<int>(v);
  const int c1 = std::min(c0 + 1, map.cols - 1), r1 = std::min(r0 + 1, map.rows - 1);
  const double fu = u - c0, fv = v - r0;
  return (1.0 - fv) * ((1.0 - fu) * map.at(r0, c0) + fu * map.at(r0, c1)) +
         fv * ((1.0 - fu) * map.at(r1, c0) + fu * map.at(r1, c1));
}

void PeakProfileAccum::add(const ScoreMap& map, const std::vector<Box>& gts, int stride) {
  for (const Box& g : gts) {
    for (int j = 0; j < kProfileSamples; ++j) {
      const double frac = static_cast<double>(j) / (kProfileSamples - 1);
      sums_.x[static_cast<std::size_t>(j)] +=
          sample_score_map(map, g.x1 + frac * g.width(), g.cy(), stride);
      sums_.y[static_cast<std::size_t>(j)] +=
          sample_score_map(map, g.cx(), g.y1 + frac * g.height(), stride);
    }
    ++count_;
  }
}

PeakProfile PeakProfileAccum::finalize() const {
  if (count_ == 0) throw std::runtime_error("peak profile over zero ground truths");
  PeakProfile p;
  for (int j = 0; j < kProfileSamples; ++j) {
    p.x[static_cast<std::size_t>(j)] = sums_.x[static_cast<std::size_t>(j)] / count_;
    p.y[static_cast<std::size_t>(j)] = sums_.y[static_cast<std::size_t>(j)] / count_;
  }
  return p;
}

double profile_peakiness(const PeakProfile& p) {
  const int last = kProfileSamples - 1;
  const double center = 0.25 * (p.x[kProfileSamples / 2 - 1] + p.x[kProfileSamples / 2] +
                                p.y[kProfileSamples / 2 - 1] + p.y[kProfileSamples / 2]);
  const double edge = 0.25 * (p.x[0] + p.x[static_cast<std::size_t>(last)] + p.y[0] +
                              p.y[static_cast<std::size_t>(last)]);
  return center - edge;
}

PpmImage render_score_map(const ScoreMap& map, int cell_px) {
  PpmImage img;
  img.width = map.cols * cell_px;
  img.height = map.rows * cell_px;
  img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double v = std::clamp(map.at(y / cell_px, x / cell_px), 0.0, 1.0);
      const std::size_t i = (static_cast<std::size_t>(y) * img.width + x) * 3;
      img.rgb[i] = static_cast<std::uint8_t>(std::lround(255.0 * v));
      img.rgb[i + 1] = static_cast<std::uint8_t>(std::lround(255.0 * v));
      img.rgb[i + 2] = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - v)));
    }
  return img;
}

PpmImage render_disagreement(const std::vector<DisagreeCat>& cats, int rows, int cols, int cell_px) {
  if (cats.size() != static_cast<std::size_t>(rows) * cols)
    throw std::invalid_argument("render_disagreement: category count does not match the extent");
  PpmImage img;
  img.width = cols * cell_px;
  img.height = rows * cell_px;
  img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  static constexpr std::uint8_t palette[4][3] = {
      {0, 200, 0},     // agree-fg: green
      {230, 0, 230},   // suppressed: magenta
      {25, 25, 25},    // agree-bg: near black
      {0, 210, 210},   // emerged: cyan
  };
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const auto cat = cats[static_cast<std::size_t>(y / cell_px) * cols + x / cell_px];
      const std::size_t i = (static_cast<std::size_t>(y) * img.width + x) * 3;
      for (int c = 0; c < 3; ++c) img.rgb[i + c] = palette[static_cast<int>(cat)][c];
    }
  return img;
}

}  // namespace ardet
