#include "ardet/macs.hpp"

#include <stdexcept>

namespace ardet {

namespace {

std::uint64_t u64(int v) { return static_cast<std::uint64_t>(v); }

}  // namespace

MacReport count_macs(const ModelConfig& cfg, int img_w, int img_h) {
  cfg.validate();
  if (img_w <= 0 || img_h <= 0 || img_w % 16 || img_h % 16)
    throw std::invalid_argument("count_macs: image extent must be a positive multiple of 16");

  MacReport rep;
  auto layer = [&](const std::string& name, std::uint64_t macs) {
    rep.layers.push_back({name, macs});
    rep.total += macs;
  };
  auto ext_w = [&](int level) { return img_w / (1 << (level - 1)); };
  auto ext_h = [&](int level) { return img_h / (1 << (level - 1)); };
  auto elems = [&](int level) { return u64(ext_w(level)) * u64(ext_h(level)); };

  // Backbone: two 3x3 convolutions per stride block.
  int in_c = 3;
  for (int level = 1; level <= 5; ++level) {
    const int out_c = cfg.backbone_width(level);
    layer("p1.b" + std::to_string(level) + ".c1", elems(level) * u64(out_c) * u64(in_c) * 9);
    layer("p1.b" + std::to_string(level) + ".c2", elems(level) * u64(out_c) * u64(out_c) * 9);
    in_c = out_c;
  }

  // De-encoder stacks.
  for (int k = 2; k <= cfg.num_phases; ++k) {
    const auto& spec = cfg.stack(k);
    const int t = spec.target_stride;
    const std::string p = "p" + std::to_string(k) + ".";
    for (int i = t; i <= 5; ++i)
      layer(p + "lat" + std::to_string(i),
            elems(i) * u64(cfg.phase_width(k, i)) * u64(cfg.phase_width(k - 1, i)) * 9);
    for (int i = t; i <= 4; ++i) {
      // Fused fractionally strided resampling touches (k/up)^2 = 4 taps per
      // output element; the two-step variant convolves at full resolution.
      const std::uint64_t taps = cfg.two_step_resample ? 9 : 4;
      layer(p + "d" + std::to_string(i),
            elems(i) * u64(cfg.phase_width(k, i)) * u64(cfg.phase_width(k, i + 1)) * taps);
    }
    for (int i = t + 1; i <= 5; ++i)
      layer(p + "latp" + std::to_string(i),
            elems(i) * u64(cfg.phase_width(k, i)) * u64(cfg.phase_width(k, i)) * 9);
    for (int i = t + 1; i <= 5; ++i)
      layer(p + "e" + std::to_string(i),
            elems(i) * u64(cfg.phase_width(k, i)) * u64(cfg.phase_width(k, i - 1)) * 9);
  }

  // Prediction heads at stride 16.
  const int A = cfg.num_anchors();
  for (int k = 1; k <= cfg.num_phases; ++k) {
    const bool predicts = cfg.autoregressive || k == cfg.num_phases;
    if (!predicts) continue;
    int head_in = cfg.phase_width(k, 5);
    if (cfg.autoregressive && k > 1) head_in += 2 * A;
    const std::string p = "p" + std::to_string(k) + ".";
    layer(p + "pfe", elems(5) * u64(cfg.pfe_width) * u64(head_in) * 9);
    layer(p + "cls", elems(5) * u64(2 * A) * u64(cfg.pfe_width));
  }
  layer("p" + std::to_string(cfg.num_phases) + ".bbox", elems(5) * u64(4 * A) * u64(cfg.pfe_width));
  return rep;
}

}  // namespace ardet
