#include <doctest.h>

#include <cmath>

#include "ardet/eval.hpp"
#include "ardet/kernels.hpp"
#include "ardet/macs.hpp"
#include "ardet/ops.hpp"
#include "ardet/rpn.hpp"
#include "oracles.hpp"

using namespace ardet;

namespace {

std::vector<Detection> random_boxes(int n, Rng& rng, int extent = 120) {
  std::vector<Detection> dets;
  for (int i = 0; i < n; ++i) {
    const double w = rng.uniform(4.0, 40.0), h = rng.uniform(4.0, 40.0);
    const double x = rng.uniform(0.0, extent - w), y = rng.uniform(0.0, extent - h);
    dets.push_back({{x, y, x + w, y + h}, rng.uniform(0.0, 1.0), 0, 0});
  }
  return dets;
}

}  // namespace

TEST_CASE("decode: zero regression output returns the anchors themselves") {
  const auto grid = make_anchor_grid(4, 4, {24}, 0.5);
  Tensor cls({1, 2, 4, 4});
  Tensor bbox({1, 4, 4, 4});
  const auto dets = decode_detections(cls, bbox, grid, 64, 64, 7);
  REQUIRE(static_cast<int>(dets.size()) == grid.count());
  for (int i = 0; i < grid.count(); ++i) {
    // Clipping to the image bound is the only allowed difference.
    const Box clipped{std::clamp(grid.boxes[static_cast<std::size_t>(i)].x1, 0.0, 64.0),
                      std::clamp(grid.boxes[static_cast<std::size_t>(i)].y1, 0.0, 64.0),
                      std::clamp(grid.boxes[static_cast<std::size_t>(i)].x2, 0.0, 64.0),
                      std::clamp(grid.boxes[static_cast<std::size_t>(i)].y2, 0.0, 64.0)};
    CHECK(dets[static_cast<std::size_t>(i)].box.x1 == doctest::Approx(clipped.x1));
    CHECK(dets[static_cast<std::size_t>(i)].box.y2 == doctest::Approx(clipped.y2));
    CHECK(dets[static_cast<std::size_t>(i)].score == doctest::Approx(0.5));
    CHECK(dets[static_cast<std::size_t>(i)].image_id == 7);
  }
}

TEST_CASE("decode applies a hand-set transform through the shared formula") {
  const auto grid = make_anchor_grid(2, 2, {32}, 0.5);
  Tensor cls({1, 2, 2, 2});
  Tensor bbox({1, 4, 2, 2});
  const BoxTransform t{0.25, -0.1, std::log(1.5), std::log(0.8)};
  bbox.at4(0, 0, 1, 1) = t.tx;
  bbox.at4(0, 1, 1, 1) = t.ty;
  bbox.at4(0, 2, 1, 1) = t.tw;
  bbox.at4(0, 3, 1, 1) = t.th;
  const auto dets = decode_detections(cls, bbox, grid, 64, 64);
  const Box expect = apply_transform(grid.boxes[static_cast<std::size_t>(grid.index_of(1, 1, 0))], t);
  const Box got = dets[static_cast<std::size_t>(grid.index_of(1, 1, 0))].box;
  CHECK(got.x1 == doctest::Approx(std::clamp(expect.x1, 0.0, 64.0)).epsilon(1e-12));
  CHECK(got.y1 == doctest::Approx(std::clamp(expect.y1, 0.0, 64.0)).epsilon(1e-12));
}

TEST_CASE("decode rejects mismatched map shapes") {
  const auto grid = make_anchor_grid(4, 4, {24}, 0.5);
  Tensor cls({1, 2, 3, 4});
  Tensor bbox({1, 4, 4, 4});
  CHECK_THROWS_AS(decode_detections(cls, bbox, grid, 64, 64), std::invalid_argument);
}

TEST_CASE("nms keeps a single detection and resolves full overlap by score") {
  const Detection a{{0, 0, 10, 10}, 0.9, 0, 0};
  const Detection b{{0, 0, 10, 10}, 0.8, 0, 0};
  CHECK(nms({a}, 0.5).size() == 1);
  const auto kept = nms({b, a}, 0.5);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].score == 0.9);
}

TEST_CASE("nms equals the quadratic reference on random 200-box sets") {
  Rng rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    const auto dets = random_boxes(200, rng);
    const auto fast = nms(dets, 0.5);
    const auto slow = oracles::brute_nms(dets, 0.5);
    REQUIRE(fast.size() == slow.size());
    for (std::size_t i = 0; i < fast.size(); ++i) {
      CHECK(fast[i].score == slow[i].score);
      CHECK(fast[i].box.x1 == slow[i].box.x1);
    }
    // Output is an antichain under the overlap relation.
    for (std::size_t i = 0; i < fast.size(); ++i)
      for (std::size_t j = i + 1; j < fast.size(); ++j)
        CHECK(iou(fast[i].box, fast[j].box) <= 0.5);
  }
}

TEST_CASE("evaluate: a perfect detector misses nothing") {
  std::vector<std::vector<Box>> gts = {{{10, 10, 30, 50}}, {{40, 20, 60, 70}}};
  std::vector<std::vector<Detection>> dets(2);
  for (int i = 0; i < 2; ++i) dets[static_cast<std::size_t>(i)].push_back({gts[static_cast<std::size_t>(i)][0], 1.0, i, 0});
  const auto curve = evaluate(dets, gts, 0.01, 1.0);
  REQUIRE(curve.defined);
  for (const auto& [fppi, mr] : curve.points) CHECK(mr == 0.0);
  CHECK(curve.log_avg_mr == 0.0);
}

TEST_CASE("evaluate: no detections means a miss rate of one everywhere") {
  std::vector<std::vector<Box>> gts = {{{10, 10, 30, 50}}};
  std::vector<std::vector<Detection>> dets(1);
  const auto curve = evaluate(dets, gts, 0.01, 1.0);
  CHECK(curve.defined);
  CHECK(curve.log_avg_mr == doctest::Approx(1.0));
}

TEST_CASE("evaluate: hand-constructed two-image sweep") {
  // Image 0: one gt, matched by a 0.9-score detection. Image 1: one gt,
  // plus a disjoint 0.6-score false positive.
  std::vector<std::vector<Box>> gts = {{{10, 10, 30, 50}}, {{40, 20, 60, 70}}};
  std::vector<std::vector<Detection>> dets(2);
  dets[0].push_back({{11, 11, 31, 51}, 0.9, 0, 0});
  dets[1].push_back({{100, 100, 120, 140}, 0.6, 1, 0});
  const auto curve = evaluate(dets, gts, 0.01, 1.0);
  REQUIRE(curve.points.size() == 2);
  // Threshold 0.9: 1 TP, 0 FP -> (0, 0.5); threshold 0.6: 1 TP, 1 FP -> (0.5, 0.5).
  CHECK(curve.points[0].first == 0.0);
  CHECK(curve.points[0].second == 0.5);
  CHECK(curve.points[1].first == 0.5);
  CHECK(curve.points[1].second == 0.5);
  CHECK(curve.log_avg_mr == doctest::Approx(0.5));
}

TEST_CASE("evaluate: zero ground truths is reported as undefined") {
  std::vector<std::vector<Box>> gts = {{}};
  std::vector<std::vector<Detection>> dets(1);
  dets[0].push_back({{0, 0, 5, 5}, 0.7, 0, 0});
  const auto curve = evaluate(dets, gts, 0.01, 1.0);
  CHECK(!curve.defined);
}

TEST_CASE("evaluate: miss rate never increases as FPPI grows") {
  Rng rng(7);
  std::vector<std::vector<Box>> gts(10);
  std::vector<std::vector<Detection>> dets(10);
  for (int i = 0; i < 10; ++i) {
    for (const auto& d : random_boxes(3, rng)) gts[static_cast<std::size_t>(i)].push_back(d.box);
    for (auto& d : random_boxes(12, rng)) {
      d.image_id = i;
      dets[static_cast<std::size_t>(i)].push_back(d);
    }
  }
  const auto curve = evaluate(dets, gts, 0.01, 1.0);
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    CHECK(curve.points[i].first >= curve.points[i - 1].first);
    CHECK(curve.points[i].second <= curve.points[i - 1].second);
  }
}

TEST_CASE("foreground max map: single anchor equals its own channel") {
  Rng rng(3);
  auto logits = Tensor::make({1, 2, 3, 3});
  for (auto& v : logits->data) v = rng.uniform(-2, 2);
  const auto map = foreground_max_map(*logits);
  const auto probs = ops::softmax_pair_fg(logits);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      CHECK(map.at(r, c) == doctest::Approx(probs->at4(0, 0, r, c)).epsilon(1e-12));
}

TEST_CASE("foreground max map is anchor-permutation invariant and matches a loop oracle") {
  Rng rng(5);
  auto logits = Tensor::make({1, 6, 4, 4});
  for (auto& v : logits->data) v = rng.uniform(-2, 2);
  const auto map = foreground_max_map(*logits);

  // Swap anchor pairs 0 and 2.
  auto swapped = Tensor::make({1, 6, 4, 4});
  const int remap[6] = {4, 5, 2, 3, 0, 1};
  for (int c = 0; c < 6; ++c)
    for (int r = 0; r < 4; ++r)
      for (int q = 0; q < 4; ++q) swapped->at4(0, remap[c], r, q) = logits->at4(0, c, r, q);
  const auto map2 = foreground_max_map(*swapped);
  for (std::size_t i = 0; i < map.v.size(); ++i) CHECK(map.v[i] == map2.v[i]);

  const auto probs = ops::softmax_pair_fg(logits);
  for (int r = 0; r < 4; ++r)
    for (int q = 0; q < 4; ++q) {
      double best = 0.0;
      for (int a = 0; a < 3; ++a) best = std::max(best, probs->at4(0, a, r, q));
      CHECK(map.at(r, q) == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("phase disagreement categories") {
  ScoreMap a{1, 2, {0.9, 0.1}};
  ScoreMap same = a;
  const auto none = phase_disagreement(a, same, 0.5);
  CHECK(none[0] == DisagreeCat::AgreeFg);
  CHECK(none[1] == DisagreeCat::AgreeBg);

  ScoreMap all_fg{1, 2, {0.8, 0.9}};
  ScoreMap all_bg{1, 2, {0.2, 0.3}};
  for (const auto cat : phase_disagreement(all_fg, all_bg, 0.5)) CHECK(cat == DisagreeCat::Suppressed);
  for (const auto cat : phase_disagreement(all_bg, all_fg, 0.5)) CHECK(cat == DisagreeCat::Emerged);

  Rng rng(11);
  ScoreMap x{5, 5, {}}, y{5, 5, {}};
  for (int i = 0; i < 25; ++i) {
    x.v.push_back(rng.uniform());
    y.v.push_back(rng.uniform());
  }
  const auto cats = phase_disagreement(x, y, 0.5);
  for (int i = 0; i < 25; ++i) {
    const bool fa = x.v[static_cast<std::size_t>(i)] >= 0.5, fb = y.v[static_cast<std::size_t>(i)] >= 0.5;
    const auto expect = fa && fb    ? DisagreeCat::AgreeFg
                        : fa && !fb ? DisagreeCat::Suppressed
                        : !fa && fb ? DisagreeCat::Emerged
                                    : DisagreeCat::AgreeBg;
    CHECK(cats[static_cast<std::size_t>(i)] == expect);
  }
  ScoreMap bad{2, 2, {0, 0, 0, 0}};
  CHECK_THROWS_AS(phase_disagreement(x, bad, 0.5), std::invalid_argument);
}

TEST_CASE("peak profile of a constant map is flat at that constant") {
  ScoreMap m{10, 10, std::vector<double>(100, 0.37)};
  PeakProfileAccum acc;
  acc.add(m, {{20, 30, 80, 120}});
  const auto p = acc.finalize();
  for (double v : p.x) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
  for (double v : p.y) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
  CHECK(profile_peakiness(p) == doctest::Approx(0.0));
}

TEST_CASE("peak profile of a center impulse peaks at the central samples") {
  ScoreMap m{10, 10, std::vector<double>(100, 0.0)};
  const Box gt{40, 40, 104, 104};  // center (72, 72) = the center of map cell (4, 4)
  m.v[4 * 10 + 4] = 1.0;
  PeakProfileAccum acc;
  acc.add(m, {gt});
  const auto p = acc.finalize();
  int best = 0;
  for (int j = 1; j < kProfileSamples; ++j)
    if (p.x[static_cast<std::size_t>(j)] > p.x[static_cast<std::size_t>(best)]) best = j;
  CHECK((best == kProfileSamples / 2 - 1 || best == kProfileSamples / 2));
  CHECK(profile_peakiness(p) > 0.0);
}

TEST_CASE("score map sampling matches the closed-form bilinear oracle") {
  Rng rng(13);
  ScoreMap m{6, 8, {}};
  for (int i = 0; i < 48; ++i) m.v.push_back(rng.uniform());
  for (int trial = 0; trial < 50; ++trial) {
    const double x = rng.uniform(0.0, 8 * 16.0);
    const double y = rng.uniform(0.0, 6 * 16.0);
    const double got = sample_score_map(m, x, y, 16);
    const double expect = oracles::bilinear_at(m.v, 6, 8, y / 16.0 - 0.5, x / 16.0 - 0.5);
    CHECK(got == doctest::Approx(expect).epsilon(1e-12));
  }
  PeakProfileAccum empty;
  CHECK_THROWS_AS(empty.finalize(), std::runtime_error);
}

TEST_CASE("mac counting: definitional 1x1 and hand-computed 3x3 layers") {
  ModelConfig mc;
  mc.image_size = 320;
  mc.backbone_widths = {1, 1, 1, 1, 1};
  mc.num_phases = 1;
  mc.policies = {0.5};
  mc.lambda_cls = {1.0};
  mc.anchor_heights = {32};
  mc.pfe_width = 1;
  const auto rep = count_macs(mc, 160, 160);
  // The phase-1 classification head is a 1x1 convolution, 1 -> 2 channels on
  // a 10x10 map: 200 MACs.
  bool found = false;
  for (const auto& l : rep.layers)
    if (l.name == "p1.cls") {
      CHECK(l.macs == 200);
      found = true;
    }
  CHECK(found);
  std::uint64_t total = 0;
  for (const auto& l : rep.layers) total += l.macs;
  CHECK(total == rep.total);
}

TEST_CASE("mac counting: 3x3 stride-1 layer equals the hand product") {
  // 8 -> 16 channels on a 32x32 map: 16*32*32*8*9 = 1179648.
  ModelConfig mc;
  mc.image_size = 128;
  mc.backbone_widths = {1, 8, 16, 1, 1};
  mc.num_phases = 1;
  mc.policies = {0.5};
  mc.lambda_cls = {1.0};
  mc.anchor_heights = {32};
  mc.pfe_width = 1;
  const auto rep = count_macs(mc, 128, 128);
  bool found = false;
  for (const auto& l : rep.layers)
    if (l.name == "p1.b3.c1") {
      CHECK(l.macs == 1179648ull);
      found = true;
    }
  CHECK(found);
}

TEST_CASE("analytic mac counting equals instrumented multiply counting exactly") {
  ModelConfig mc;
  mc.image_size = 32;
  mc.backbone_widths = {2, 3, 4, 5, 6};
  mc.num_phases = 3;
  mc.stacks = {{3, {3, 4, 5}}, {4, {4, 5}}};
  mc.policies = {0.4, 0.5, 0.6};
  mc.lambda_cls = {0.1, 0.1, 1.0};
  mc.pfe_width = 7;
  mc.anchor_heights = {16, 24};
  for (bool two_step : {false, true}) {
    mc.two_step_resample = two_step;
    ParamStore params;
    Rng rng(21);
    rpn_init(params, mc, rng);
    Tape tape(false);
    auto image = Tensor::make({1, 3, 32, 32}, 0.5);
    kernels::set_mac_counting(true);
    kernels::reset_mac_count();
    rpn_forward(tape, image, params, mc, false);
    const std::uint64_t instrumented = kernels::mac_count();
    kernels::set_mac_counting(false);
    const auto rep = count_macs(mc, 32, 32);
    CHECK(rep.total == instrumented);
  }
}

TEST_CASE("mac ordering over widths and phase counts at paper-scale settings") {
  auto scaled = [](int phases, ModelConfig::DeEncoderSpec (*widths)(int)) {
    ModelConfig mc;
    mc.image_size = 640;
    mc.backbone_widths = {64, 128, 256, 512, 512};
    mc.pfe_width = 512;
    mc.num_phases = phases;
    mc.policies.assign(static_cast<std::size_t>(phases), 0.5);
    mc.lambda_cls.assign(static_cast<std::size_t>(phases), 1.0);
    for (int k = 2; k <= phases; ++k) mc.stacks.push_back(widths(k == 2 ? 3 : 4));
    return mc;
  };
  const auto s = count_macs(scaled(3, widths_small), 640, 480).total;
  const auto m = count_macs(scaled(3, widths_medium), 640, 480).total;
  const auto l = count_macs(scaled(3, widths_large), 640, 480).total;
  CHECK(s < m);
  CHECK(m < l);
  std::uint64_t prev = 0;
  for (int phases = 1; phases <= 4; ++phases) {
    const auto t = count_macs(scaled(phases, widths_medium), 640, 480).total;
    CHECK(t > prev);
    prev = t;
  }
}
