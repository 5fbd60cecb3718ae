#include "ardet/de_encoder.hpp"

#include "ardet/ops.hpp"

namespace ardet {

namespace {

std::string pname(int phase, const std::string& tail) {
  return "p" + std::to_string(phase) + "." + tail;
}

// 3x3 lateral convolution, optionally followed by BN.
TensorPtr lateral(Tape& tape, const TensorPtr& x, const ParamStore& params, int phase,
                  const std::string& base, bool bn, bool train) {
  auto y = ops::conv2d(tape, x, params.get(pname(phase, base + ".w")),
                       params.get(pname(phase, base + ".b")), 1, 1);
  if (bn)
    y = ops::batchnorm(tape, y, params.get(pname(phase, base + ".bn.g")),
                       params.get(pname(phase, base + ".bn.b")),
                       params.get(pname(phase, base + ".bn.rm")),
                       params.get(pname(phase, base + ".bn.rv")), train);
  return y;
}

void create_lateral(ParamStore& params, int phase, const std::string& base, int in_c, int out_c,
                    bool bn, Rng& rng) {
  auto w = params.create(pname(phase, base + ".w"), {out_c, in_c, 3, 3});
  init_he_uniform(*w, in_c * 9, rng);
  params.create(pname(phase, base + ".b"), {out_c});
  if (bn) {
    auto g = params.create(pname(phase, base + ".bn.g"), {out_c});
    std::fill(g->data.begin(), g->data.end(), 1.0);
    params.create(pname(phase, base + ".bn.b"), {out_c});
    params.create(pname(phase, base + ".bn.rm"), {out_c}, false);
    auto rv = params.create(pname(phase, base + ".bn.rv"), {out_c}, false);
    std::fill(rv->data.begin(), rv->data.end(), 1.0);
  }
}

}  // namespace

void de_encoder_init(ParamStore& params, const ModelConfig& cfg, int phase, Rng& rng) {
  const auto& spec = cfg.stack(phase);
  const int t = spec.target_stride;
  for (int i = t; i <= 5; ++i)
    create_lateral(params, phase, "lat" + std::to_string(i), cfg.phase_width(phase - 1, i),
                   cfg.phase_width(phase, i), cfg.bn_enabled, rng);
  for (int i = t; i <= 4; ++i) {
    const int in_c = cfg.phase_width(phase, i + 1);
    const int out_c = cfg.phase_width(phase, i);
    if (cfg.two_step_resample) {
      auto w = params.create(pname(phase, "d" + std::to_string(i) + ".w"), {out_c, in_c, 3, 3});
      init_he_uniform(*w, in_c * 9, rng);
    } else {
      auto w = params.create(pname(phase, "d" + std::to_string(i) + ".w"), {in_c, out_c, 4, 4});
      init_he_uniform(*w, in_c * 16, rng);
    }
    params.create(pname(phase, "d" + std::to_string(i) + ".b"), {out_c});
  }
  for (int i = t + 1; i <= 5; ++i)
    create_lateral(params, phase, "latp" + std::to_string(i), cfg.phase_width(phase, i),
                   cfg.phase_width(phase, i), cfg.bn_enabled, rng);
  for (int i = t + 1; i <= 5; ++i) {
    const int in_c = cfg.phase_width(phase, i - 1);
    const int out_c = cfg.phase_width(phase, i);
    auto w = params.create(pname(phase, "e" + std::to_string(i) + ".w"), {out_c, in_c, 3, 3});
    init_he_uniform(*w, in_c * 9, rng);
    params.create(pname(phase, "e" + std::to_string(i) + ".b"), {out_c});
  }
}

std::map<int, TensorPtr> top_down(Tape& tape, const FeaturePyramid& prev, const ModelConfig& cfg,
                                  int phase, const ParamStore& params, bool train) {
  const auto& spec = cfg.stack(phase);
  const int t = spec.target_stride;
  std::map<int, TensorPtr> lat;
  for (int i = t; i <= 5; ++i)
    lat[i] = lateral(tape, prev.level(i), params, phase, "lat" + std::to_string(i),
                     cfg.bn_enabled, train);
  std::map<int, TensorPtr> decoded;
  decoded[5] = lat[5];
  for (int i = 4; i >= t; --i) {
    const std::string d = "d" + std::to_string(i);
    TensorPtr up;
    if (cfg.two_step_resample) {
      up = ops::bilinear_up2(tape, decoded[i + 1]);
      up = ops::conv2d(tape, up, params.get(pname(phase, d + ".w")),
                       params.get(pname(phase, d + ".b")), 1, 1);
    } else {
      up = ops::tconv2d(tape, decoded[i + 1], params.get(pname(phase, d + ".w")),
                        params.get(pname(phase, d + ".b")), 2, 1);
    }
    decoded[i] = ops::add(tape, up, lat[i]);
  }
  return decoded;
}

FeaturePyramid bottom_up(Tape& tape, const std::map<int, TensorPtr>& decoded,
                         const ModelConfig& cfg, int phase, const ParamStore& params, bool train) {
  const auto& spec = cfg.stack(phase);
  const int t = spec.target_stride;
  FeaturePyramid out;
  out.phase = phase;
  auto level_of = [&](int i) -> const TensorPtr& {
    auto it = decoded.find(i);
    if (it == decoded.end())
      throw std::out_of_range("bottom_up: decoded maps are missing level " + std::to_string(i));
    return it->second;
  };
  // E_t and D_t are the same tensor.
  out.levels[t] = level_of(t);
  for (int i = t + 1; i <= 5; ++i) {
    auto lat_p = lateral(tape, level_of(i), params, phase, "latp" + std::to_string(i),
                         cfg.bn_enabled, train);
    const std::string e = "e" + std::to_string(i);
    TensorPtr down;
    if (cfg.two_step_resample) {
      down = ops::bilinear_down2(tape, out.levels[i - 1]);
      down = ops::conv2d(tape, down, params.get(pname(phase, e + ".w")),
                         params.get(pname(phase, e + ".b")), 1, 1);
    } else {
      down = ops::conv2d(tape, out.levels[i - 1], params.get(pname(phase, e + ".w")),
                         params.get(pname(phase, e + ".b")), 2, 1);
    }
    out.levels[i] = ops::add(tape, down, lat_p);
  }
  return out;
}

DeEncoderOut de_encode(Tape& tape, const FeaturePyramid& prev, const ModelConfig& cfg, int phase,
                       const ParamStore& params, bool train) {
  DeEncoderOut out;
  out.decoded = top_down(tape, prev, cfg, phase, params, train);
  out.pyramid = bottom_up(tape, out.decoded, cfg, phase, params, train);
  return out;
}

}  // namespace ardet
