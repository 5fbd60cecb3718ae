#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "ardet/pnm.hpp"
#include "ardet/targets.hpp"
#include "ardet/tensor.hpp"

namespace ardet {

struct Detection {
  Box box;
  double score = 0.0;
  int image_id = 0;
  int phase = 0;  // phase of origin for analysis runs
};

// Per-anchor foreground probability + box decode + clipping; boxes with a
// side under 2 px are dropped.
std::vector<Detection> decode_detections(const Tensor& cls_logits, const Tensor& bbox_map,
                                         const AnchorGrid& anchors, int img_w, int img_h,
                                         int image_id = 0, int phase = 0);

// Greedy descending-score suppression of IoU > threshold; ties broken by the
// earlier input index.
std::vector<Detection> nms(const std::vector<Detection>& dets, double overlap_threshold);

struct EvalCurve {
  std::vector<std::pair<double, double>> points;  // (fppi, miss rate), fppi non-decreasing
  double log_avg_mr = 1.0;
  bool defined = false;  // false when there are no ground truths
  int gt_count = 0;
};

// Standard greedy matching at IoU >= match_iou, curve swept over score
// thresholds, log-average over 9 points evenly spaced in log10 FPPI with
// flat extrapolation below the lowest achieved FPPI.
EvalCurve evaluate(const std::vector<std::vector<Detection>>& dets_per_image,
                   const std::vector<std::vector<Box>>& gts_per_image, double fppi_lo,
                   double fppi_hi, double match_iou = 0.5);

// Recall of the ground truths under greedy matching at the given IoU.
double detection_recall(const std::vector<std::vector<Detection>>& dets_per_image,
                        const std::vector<std::vector<Box>>& gts_per_image, double match_iou = 0.5);

void write_curve(const std::filesystem::path& path, const EvalCurve& curve);
void write_detections(const std::filesystem::path& path, const std::vector<Detection>& dets);

// 2-D score map (rows x cols).
struct ScoreMap {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
};

// Max over anchors of the foreground probability at each location.
ScoreMap foreground_max_map(const Tensor& cls_logits);

enum class DisagreeCat : std::uint8_t { AgreeFg = 0, Suppressed = 1, AgreeBg = 2, Emerged = 3 };

// Cell categories after binarizing both maps at the threshold: suppressed =
// foreground in a but background in b, emerged = the converse.
std::vector<DisagreeCat> phase_disagreement(const ScoreMap& a, const ScoreMap& b, double threshold);

// 20-point bilinear score profiles along the X and Y center lines of ground
// truth boxes, averaged over all boxes fed to the accumulator.
constexpr int kProfileSamples = 20;

struct PeakProfile {
  std::array<double, kProfileSamples> x{};
  std::array<double, kProfileSamples> y{};
};

class PeakProfileAccum {
 public:
  void add(const ScoreMap& map, const std::vector<Box>& gts, int stride = 16);
  PeakProfile finalize() const;  // rejects an empty accumulation
  int count() const { return count_; }

 private:
  PeakProfile sums_;
  int count_ = 0;
};

// Mean of the two central samples minus mean of the two edge samples,
// averaged over both axes.
double profile_peakiness(const PeakProfile& p);

// Bilinear read of a score map in image coordinates (cell centers at
// ((c + 0.5) * stride, (r + 0.5) * stride)).
double sample_score_map(const ScoreMap& map, double x, double y, int stride = 16);

// Pixmap renderings (blue -> yellow scale; agreement green, suppression
// magenta, emergence cyan, background near-black).
PpmImage render_score_map(const ScoreMap& map, int cell_px = 1);
PpmImage render_disagreement(const std::vector<DisagreeCat>& cats, int rows, int cols,
                             int cell_px = 1);

}  // namespace ardet
