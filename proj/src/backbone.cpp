#include "ardet/backbone.hpp"

#include <stdexcept>

#include "ardet/ops.hpp"

namespace ardet {

namespace {

std::string block_name(int level, int conv) {
  return "p1.b" + std::to_string(level) + ".c" + std::to_string(conv);
}

}  // namespace

void backbone_init(ParamStore& params, const ModelConfig& cfg, Rng& rng) {
  int in_c = 3;
  for (int level = 1; level <= 5; ++level) {
    const int out_c = cfg.backbone_width(level);
    for (int conv = 1; conv <= 2; ++conv) {
      const int ic = conv == 1 ? in_c : out_c;
      auto w = params.create(block_name(level, conv) + ".w", {out_c, ic, 3, 3});
      init_he_uniform(*w, ic * 9, rng);
      params.create(block_name(level, conv) + ".b", {out_c});
    }
    in_c = out_c;
  }
}

FeaturePyramid backbone_forward(Tape& tape, const TensorPtr& image, const ParamStore& params,
                                const ModelConfig& cfg) {
  (void)cfg;
  if (!image || image->ndim() != 4 || image->dim(1) != 3)
    throw std::invalid_argument("backbone expects a (B, 3, H, W) image tensor");
  const int H = image->dim(2), W = image->dim(3);
  for (int e : {H, W})
    if (e % 16 != 0)
      throw std::invalid_argument("backbone image extent " + std::to_string(e) +
                                  " is not divisible by 16; pad to " +
                                  std::to_string((e + 15) / 16 * 16));

  FeaturePyramid pyr;
  pyr.phase = 1;
  TensorPtr x = image;
  for (int level = 1; level <= 5; ++level) {
    for (int conv = 1; conv <= 2; ++conv) {
      x = ops::conv2d(tape, x, params.get(block_name(level, conv) + ".w"),
                      params.get(block_name(level, conv) + ".b"), 1, 1);
      x = ops::relu(tape, x);
    }
    if (level >= 3) pyr.levels[level] = x;
    if (level < 5) x = ops::maxpool2x2(tape, x);
  }
  return pyr;
}

}  // namespace ardet
