#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ardet {

// Axis-aligned box in image pixels, continuous corner convention
// (width = x2 - x1, x2 > x1).
struct Box {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }
  double area() const { return width() * height(); }
};

double iou(const Box& a, const Box& b);

// Dense anchor lattice at feature stride 16; deterministic ordering
// (row-major location, then anchor shape index), centers at
// ((col + 0.5) * stride, (row + 0.5) * stride).
struct AnchorGrid {
  int rows = 0;
  int cols = 0;
  int stride = 16;
  std::vector<std::pair<double, double>> shapes;  // (width, height)
  std::vector<Box> boxes;                         // rows * cols * shapes.size()

  int count() const { return static_cast<int>(boxes.size()); }
  int num_shapes() const { return static_cast<int>(shapes.size()); }
  int index_of(int row, int col, int a) const {
    return (row * cols + col) * num_shapes() + a;
  }
};

AnchorGrid make_anchor_grid(int rows, int cols, const std::vector<double>& heights,
                            double aspect, int stride = 16);

// Text serialization used for the stable-ordering regression.
std::string serialize_anchor_grid(const AnchorGrid& grid);

enum class AnchorLabel : std::int8_t { Background = 0, Foreground = 1, Ignore = 2 };

struct LabelAssignment {
  std::vector<AnchorLabel> labels;
  std::vector<int> match;  // ground-truth index for foreground anchors, -1 otherwise
  int foreground_count = 0;
  int background_count = 0;
};

// Foreground iff max IoU >= h (argmax match, ties to the lower gt index);
// background below bg_ceiling; ignore in between. force_best keeps the best
// anchor of every gt foreground regardless of h.
LabelAssignment assign_labels(const AnchorGrid& anchors, const std::vector<Box>& gts,
                              double h, double bg_ceiling = 0.3, bool force_best = true);

// (t_x, t_y) center translation normalized by the anchor extent, (t_w, t_h)
// log scale ratios; apply inverts compute exactly.
struct BoxTransform {
  double tx = 0.0, ty = 0.0, tw = 0.0, th = 0.0;
};

BoxTransform compute_transform(const Box& anchor, const Box& gt);
Box apply_transform(const Box& anchor, const BoxTransform& t);

// Binary map at stride level i (downscale factor 2^(i-1)): cell 1 iff its
// center falls inside any ground-truth box.
std::vector<double> seg_targets(const std::vector<Box>& gts, int level, int rows, int cols);

}  // namespace ardet
