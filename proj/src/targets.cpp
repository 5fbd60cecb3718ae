#include "ardet/targets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace ardet {

double iou(const Box& a, const Box& b) {
  const double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  return inter / (a.area() + b.area() - inter);
}

AnchorGrid make_anchor_grid(int rows, int cols, const std::vector<double>& heights,
                            double aspect, int stride) {
  if (heights.empty()) throw std::invalid_argument("anchor grid needs at least one height");
  AnchorGrid g;
  g.rows = rows;
  g.cols = cols;
  g.stride = stride;
  for (double h : heights) g.shapes.emplace_back(aspect * h, h);
  g.boxes.reserve(static_cast<std::size_t>(rows) * cols * heights.size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double cx = (c + 0.5) * stride;
      const double cy = (r + 0.5) * stride;
      for (const auto& [w, h] : g.shapes)
        g.boxes.push_back({cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h});
    }
  return g;
}

std::string serialize_anchor_grid(const AnchorGrid& grid) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "anchors %d %d stride %d shapes %d\n", grid.rows, grid.cols,
                grid.stride, grid.num_shapes());
  out += line;
  for (const Box& b : grid.boxes) {
    std::snprintf(line, sizeof line, "%.17g %.17g %.17g %.17g\n", b.x1, b.y1, b.x2, b.y2);
    out += line;
  }
  return out;
}

LabelAssignment assign_labels(const AnchorGrid& anchors, const std::vector<Box>& gts,
                              double h, double bg_ceiling, bool force_best) {
  if (!(h > 0.0 && h <= 1.0)) throw std::invalid_argument("labeling policy h must be in (0, 1]");
  const int n = anchors.count();
  LabelAssignment out;
  out.labels.assign(n, AnchorLabel::Background);
  out.match.assign(n, -1);
  if (gts.empty()) {
    out.background_count = n;
    return out;
  }

  std::vector<double> best_iou(n, 0.0);
  std::vector<int> best_gt(n, -1);
  std::vector<double> gt_best_iou(gts.size(), 0.0);
  std::vector<int> gt_best_anchor(gts.size(), -1);
  for (int i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < gts.size(); ++j) {
      const double v = iou(anchors.boxes[i], gts[j]);
      if (v > best_iou[i]) {
        best_iou[i] = v;
        best_gt[i] = static_cast<int>(j);
      }
      if (v > gt_best_iou[j]) {
        gt_best_iou[j] = v;
        gt_best_anchor[j] = i;
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    if (best_iou[i] >= h) {
      out.labels[i] = AnchorLabel::Foreground;
      out.match[i] = best_gt[i];
    } else if (best_iou[i] >= bg_ceiling) {
      out.labels[i] = AnchorLabel::Ignore;
    }
  }
  if (force_best) {
    for (std::size_t j = 0; j < gts.size(); ++j) {
      const int i = gt_best_anchor[j];
      if (i < 0) continue;
      if (out.labels[i] != AnchorLabel::Foreground) {
        out.labels[i] = AnchorLabel::Foreground;
        out.match[i] = static_cast<int>(j);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (out.labels[i] == AnchorLabel::Foreground)
      ++out.foreground_count;
    else if (out.labels[i] == AnchorLabel::Background)
      ++out.background_count;
  }
  return out;
}

BoxTransform compute_transform(const Box& anchor, const Box& gt) {
  if (gt.width() <= 0.0 || gt.height() <= 0.0)
    throw std::invalid_argument("compute_transform: ground truth has non-positive extent");
  if (anchor.width() <= 0.0 || anchor.height() <= 0.0)
    throw std::invalid_argument("compute_transform: anchor has non-positive extent");
  BoxTransform t;
  t.tx = (gt.cx() - anchor.cx()) / anchor.width();
  t.ty = (gt.cy() - anchor.cy()) / anchor.height();
  t.tw = std::log(gt.width() / anchor.width());
  t.th = std::log(gt.height() / anchor.height());
  return t;
}

Box apply_transform(const Box& anchor, const BoxTransform& t) {
  const double cx = anchor.cx() + t.tx * anchor.width();
  const double cy = anchor.cy() + t.ty * anchor.height();
  const double w = anchor.width() * std::exp(t.tw);
  const double h = anchor.height() * std::exp(t.th);
  return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
}

std::vector<double> seg_targets(const std::vector<Box>& gts, int level, int rows, int cols) {
  if (level < 3 || level > 5) throw std::invalid_argument("seg_targets level must be in [3, 5]");
  const double f = static_cast<double>(1 << (level - 1));
  std::vector<double> map(static_cast<std::size_t>(rows) * cols, 0.0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double cx = (c + 0.5) * f;
      const double cy = (r + 0.5) * f;
      for (const Box& g : gts)
        if (cx >= g.x1 && cx < g.x2 && cy >= g.y1 && cy < g.y2) {
          map[static_cast<std::size_t>(r) * cols + c] = 1.0;
          break;
        }
    }
  return map;
}

}  // namespace ardet
