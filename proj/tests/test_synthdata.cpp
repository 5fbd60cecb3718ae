#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ardet/synthdata.hpp"

using namespace ardet;
namespace fs = std::filesystem;

namespace {

SceneConfig quick_cfg() {
  SceneConfig cfg;
  cfg.image_size = 96;
  cfg.seed = 42;
  return cfg;
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("ardet_test_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("scene generation is deterministic per (seed, index)") {
  const SceneConfig cfg = quick_cfg();
  const auto a = generate_scene(cfg, 3);
  const auto b = generate_scene(cfg, 3);
  CHECK(a.image->data == b.image->data);
  REQUIRE(a.gts.size() == b.gts.size());
  for (std::size_t i = 0; i < a.gts.size(); ++i) {
    CHECK(a.gts[i].x1 == b.gts[i].x1);
    CHECK(a.gts[i].y2 == b.gts[i].y2);
  }
  const auto c = generate_scene(cfg, 4);
  CHECK(a.image->data != c.image->data);
}

TEST_CASE("a zero pedestrian range gives pure background") {
  SceneConfig cfg = quick_cfg();
  cfg.ped_min = cfg.ped_max = 0;
  const auto scene = generate_scene(cfg, 0);
  CHECK(scene.gts.empty());
  CHECK(scene.image->numel() == 3u * 96 * 96);
}

TEST_CASE("ground truths stay in bounds and within the configured count range") {
  SceneConfig cfg = quick_cfg();
  for (int i = 0; i < 50; ++i) {
    const auto scene = generate_scene(cfg, i);
    CHECK(static_cast<int>(scene.gts.size()) <= cfg.ped_max);
    if (!scene.placement_truncated)
      CHECK(static_cast<int>(scene.gts.size()) >= cfg.ped_min);
    for (const Box& g : scene.gts) {
      CHECK(g.x1 >= 0.0);
      CHECK(g.y1 >= 0.0);
      CHECK(g.x2 <= cfg.image_size);
      CHECK(g.y2 <= cfg.image_size);
      CHECK(g.height() >= cfg.height_min - 1e-9);
      CHECK(g.height() <= cfg.height_max + 1e-9);
    }
  }
}

TEST_CASE("mean rendered aspect ratio stays near the configured mean") {
  SceneConfig cfg = quick_cfg();
  cfg.image_size = 160;
  double sum = 0.0;
  int n = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto scene = generate_scene(cfg, i);
    for (const Box& g : scene.gts) {
      sum += g.width() / g.height();
      ++n;
    }
  }
  REQUIRE(n > 500);
  CHECK(std::abs(sum / n - cfg.aspect_mean) < 0.02);
}

TEST_CASE("dataset write/read round trip preserves annotations exactly") {
  TempDir tmp;
  SceneConfig cfg = quick_cfg();
  write_dataset(cfg, tmp.path, 10, 5);
  const auto scenes = read_dataset(tmp.path);
  REQUIRE(scenes.size() == 10);
  for (int i = 0; i < 10; ++i) {
    const auto ref = generate_scene(cfg, 5 + i);
    REQUIRE(scenes[static_cast<std::size_t>(i)].gts.size() == ref.gts.size());
    for (std::size_t g = 0; g < ref.gts.size(); ++g) {
      CHECK(scenes[static_cast<std::size_t>(i)].gts[g].x1 == ref.gts[g].x1);
      CHECK(scenes[static_cast<std::size_t>(i)].gts[g].y1 == ref.gts[g].y1);
      CHECK(scenes[static_cast<std::size_t>(i)].gts[g].x2 == ref.gts[g].x2);
      CHECK(scenes[static_cast<std::size_t>(i)].gts[g].y2 == ref.gts[g].y2);
      CHECK(scenes[static_cast<std::size_t>(i)].occlusion[g] == ref.occlusion[g]);
    }
    // Pixels survive the 8-bit quantization round trip.
    const auto ppm = scene_to_ppm(ref);
    CHECK(scenes[static_cast<std::size_t>(i)].image.rgb == ppm.rgb);
  }
}

TEST_CASE("an empty dataset directory yields an empty stream") {
  TempDir tmp;
  CHECK(read_dataset(tmp.path / "nothing").empty());
}

TEST_CASE("a corrupted annotation line is rejected citing file and line") {
  TempDir tmp;
  SceneConfig cfg = quick_cfg();
  write_dataset(cfg, tmp.path, 1, 0);
  {
    std::ofstream os(tmp.path / "labels" / "0000.txt");
    os << "12 14 30 60 0\n";
    os << "not a number at all\n";
  }
  CHECK_THROWS_WITH_AS(read_dataset(tmp.path), doctest::Contains("0000.txt:2"),
                       std::runtime_error);
}

TEST_CASE("scene tensor normalizes 8-bit pixels into the unit interval") {
  const auto scene = generate_scene(quick_cfg(), 1);
  const auto t = scene_tensor(scene_to_ppm(scene));
  CHECK(t->shape == std::vector<int>({1, 3, 96, 96}));
  for (double v : t->data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}
