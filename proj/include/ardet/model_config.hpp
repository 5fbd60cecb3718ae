#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ardet {

// Architecture and supervision settings shared by the model builders, the
// loss, and the MAC accountant.
struct ModelConfig {
  int image_size = 160;

  // Backbone channel widths for stride levels 1..5.
  std::vector<int> backbone_widths = {8, 16, 32, 64, 128};

  struct DeEncoderSpec {
    int target_stride = 3;
    std::vector<int> widths;  // per level in [target_stride, 5]
  };
  // One entry per phase k >= 2 (phase 1 is the backbone).
  std::vector<DeEncoderSpec> stacks;

  int num_phases = 3;
  int pfe_width = 64;
  bool autoregressive = true;
  bool two_step_resample = false;
  bool bn_enabled = true;

  std::vector<double> anchor_heights = {32, 64, 128};
  double anchor_aspect = 0.41;

  std::vector<double> policies = {0.4, 0.5, 0.6};
  std::vector<double> lambda_cls = {0.1, 0.1, 1.0};
  double lambda_bbox = 5.0;
  double lambda_seg = 1.0;
  double bbox_h = -1.0;  // < 0: use the final-phase policy
  double bg_ceiling = 0.3;
  bool force_best_match = true;
  bool class_balance = true;

  int num_anchors() const { return static_cast<int>(anchor_heights.size()); }
  int grid_extent() const { return image_size / 16; }

  int backbone_width(int level) const { return backbone_widths.at(static_cast<std::size_t>(level - 1)); }

  const DeEncoderSpec& stack(int phase) const {
    if (phase < 2 || phase > num_phases) throw std::out_of_range("no de-encoder stack for phase " + std::to_string(phase));
    return stacks.at(static_cast<std::size_t>(phase - 2));
  }

  // Channel width of level i in phase k's pyramid (k = 1 is the backbone).
  int phase_width(int phase, int level) const {
    if (phase == 1) return backbone_width(level);
    const auto& s = stack(phase);
    if (level < s.target_stride || level > 5)
      throw std::out_of_range("phase " + std::to_string(phase) + " has no level " + std::to_string(level));
    return s.widths.at(static_cast<std::size_t>(level - s.target_stride));
  }

  void validate() const;
};

// The paper-scale channel settings selectable for the MAC ablation.
ModelConfig::DeEncoderSpec widths_small(int target_stride);
ModelConfig::DeEncoderSpec widths_medium(int target_stride);
ModelConfig::DeEncoderSpec widths_large(int target_stride);

}  // namespace ardet
