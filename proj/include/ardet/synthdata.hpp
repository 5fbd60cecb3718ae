#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ardet/pnm.hpp"
#include "ardet/targets.hpp"
#include "ardet/tensor.hpp"

namespace ardet {

// Deterministic synthetic street scenes: textured background with clutter,
// plus upright "pedestrians" (torso/head/split legs) and optional partial
// occluders. (seed, index) fully determines a scene.
struct SceneConfig {
  int image_size = 160;
  int ped_min = 1;
  int ped_max = 4;
  double height_min = 24.0;
  double height_max = 96.0;
  double aspect_mean = 0.41;
  double aspect_jitter = 0.05;
  double occlusion_prob = 0.25;
  int clutter = 14;
  std::uint64_t seed = 1;
};

struct AnnotatedScene {
  TensorPtr image;  // (3, H, W), values in [0, 1]
  std::vector<Box> gts;
  std::vector<double> occlusion;  // per gt, covered area fraction
  bool placement_truncated = false;  // fewer pedestrians than drawn count
};

AnnotatedScene generate_scene(const SceneConfig& cfg, int index);

PpmImage scene_to_ppm(const AnnotatedScene& scene);

// Dataset directory layout: images/NNNN.ppm, labels/NNNN.txt, meta.cfg.
// Annotation lines are `x1 y1 x2 y2 occlusion_fraction` (round-trip exact).
void write_dataset(const SceneConfig& cfg, const std::filesystem::path& dir, int count,
                   int start_index);

struct LoadedScene {
  PpmImage image;
  std::vector<Box> gts;
  std::vector<double> occlusion;
};

std::vector<LoadedScene> read_dataset(const std::filesystem::path& dir);

// (1, 3, H, W) batch tensor in [0, 1] from 8-bit pixels.
TensorPtr scene_tensor(const PpmImage& img);

}  // namespace ardet
