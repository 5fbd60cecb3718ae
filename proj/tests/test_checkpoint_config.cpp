#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ardet/checkpoint.hpp"
#include "ardet/config.hpp"

using namespace ardet;
namespace fs = std::filesystem;

TEST_CASE("checkpoint round trip restores names, shapes, flags and values") {
  const fs::path path = fs::temp_directory_path() / "ardet_ckpt_test.bin";
  ParamStore store;
  auto a = store.create("p1.conv.w", {2, 3, 1, 1});
  for (std::size_t i = 0; i < a->numel(); ++i) a->data[i] = 0.125 * static_cast<double>(i) - 0.3;
  auto buf = store.create("p2.bn.rm", {3}, false);
  buf->data = {1e-17, -42.5, 3.14159265358979};
  save_checkpoint(path, store);

  const auto loaded = load_checkpoint(path);
  REQUIRE(loaded.entries().size() == 2);
  CHECK(loaded.get("p1.conv.w")->shape == std::vector<int>({2, 3, 1, 1}));
  CHECK(loaded.get("p1.conv.w")->data == a->data);
  CHECK(loaded.get("p1.conv.w")->requires_grad);
  CHECK(!loaded.get("p2.bn.rm")->requires_grad);
  CHECK(loaded.get("p2.bn.rm")->data == buf->data);

  // Saving the same store twice is byte-identical.
  const fs::path path2 = fs::temp_directory_path() / "ardet_ckpt_test2.bin";
  save_checkpoint(path2, loaded);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("checkpoint loader rejects a foreign header") {
  const fs::path path = fs::temp_directory_path() / "ardet_ckpt_bad.bin";
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOTACKPTfile";
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("ARDTCKP1"), std::runtime_error);
  fs::remove(path);
}

TEST_CASE("config: defaults carry the published hyperparameters") {
  RunConfig cfg;
  CHECK(cfg.list("rpn.policies") == std::vector<double>({0.4, 0.5, 0.6}));
  CHECK(cfg.list("rpn.lambda") == std::vector<double>({0.1, 0.1, 1.0}));
  CHECK(cfg.getf("rpn.lambda_bbox") == 5.0);
  CHECK(cfg.getf("rpn.lambda_seg") == 1.0);
  CHECK(cfg.getf("rcnn.z") == 0.005);
  CHECK(cfg.getf("rcnn.h") == 0.7);
  CHECK(cfg.geti("rpn.num_phases") == 3);
}

TEST_CASE("config: unknown keys are rejected, overrides apply") {
  RunConfig cfg;
  CHECK_THROWS_WITH_AS(cfg.set("rpn.unknown", "1"), doctest::Contains("rpn.unknown"),
                       std::invalid_argument);
  cfg.set("train.iters", "77");
  CHECK(cfg.geti("train.iters") == 77);
  CHECK_THROWS_AS(cfg.getb("train.iters"), std::invalid_argument);
}

TEST_CASE("config: file parsing with comments, and the echo reparses to itself") {
  const fs::path path = fs::temp_directory_path() / "ardet_cfg_test.cfg";
  {
    std::ofstream os(path);
    os << "# a comment line\n\n";
    os << "train.iters = 12\n";
    os << "rpn.policies = 0.5,0.55,0.6\n";
  }
  const auto cfg = RunConfig::from_file(path);
  CHECK(cfg.geti("train.iters") == 12);
  CHECK(cfg.list("rpn.policies")[1] == 0.55);

  const fs::path echo = fs::temp_directory_path() / "ardet_cfg_echo.cfg";
  cfg.write_echo(echo);
  const auto again = RunConfig::from_file(echo);
  CHECK(again.values() == cfg.values());
  fs::remove(path);
  fs::remove(echo);
}

TEST_CASE("config: malformed lines carry the line number") {
  const fs::path path = fs::temp_directory_path() / "ardet_cfg_bad.cfg";
  {
    std::ofstream os(path);
    os << "train.iters = 5\n";
    os << "who knows\n";
  }
  CHECK_THROWS_WITH_AS(RunConfig::from_file(path), doctest::Contains(":2"), std::runtime_error);
  fs::remove(path);
}

TEST_CASE("model config derivation validates phase/policy agreement") {
  RunConfig cfg;
  cfg.set("rpn.num_phases", "2");
  CHECK_THROWS_AS(model_config_from(cfg), std::invalid_argument);  // 3 policies for 2 phases
  cfg.set("rpn.policies", "0.4,0.6");
  cfg.set("rpn.lambda", "0.1,1");
  const auto mc = model_config_from(cfg);
  CHECK(mc.num_phases == 2);
  CHECK(mc.stacks.size() == 1);
  CHECK(mc.stacks[0].target_stride == 3);
}

TEST_CASE("anchor grid from config covers the stride-16 lattice") {
  RunConfig cfg;
  const auto mc = model_config_from(cfg);
  const auto grid = anchor_grid_from(mc);
  CHECK(grid.rows == 10);
  CHECK(grid.cols == 10);
  CHECK(grid.count() == 300);
}
