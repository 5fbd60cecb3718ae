#include "ardet/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ardet/checkpoint.hpp"
#include "ardet/macs.hpp"
#include "ardet/ops.hpp"

namespace ardet {

namespace fs = std::filesystem;

namespace {

std::vector<LoadedScene> load_split(const RunConfig& cfg, const std::string& split) {
  const fs::path dir = cfg.data_dir() / split;
  auto scenes = read_dataset(dir);
  if (scenes.empty())
    throw std::runtime_error("no scenes under " + dir.string() + "; run `gen-data` first");
  return scenes;
}

// Eval-mode forward over one loaded scene.
PhaseOutputs forward_scene(const LoadedScene& scene, const ParamStore& params,
                           const ModelConfig& mc) {
  Tape tape(false);
  return rpn_forward(tape, scene_tensor(scene.image), params, mc, false);
}

std::vector<int> predicting_phases(const ModelConfig& mc) {
  std::vector<int> out;
  for (int k = 1; k <= mc.num_phases; ++k)
    if (mc.autoregressive || k == mc.num_phases) out.push_back(k);
  return out;
}

}  // namespace

void gen_dataset(const RunConfig& cfg) {
  SceneConfig sc = scene_config_from(cfg);
  const int train = cfg.geti("data.train_count");
  const int test = cfg.geti("data.test_count");
  write_dataset(sc, cfg.data_dir() / "train", train, 0);
  write_dataset(sc, cfg.data_dir() / "test", test, train);
}

TrainRpnResult train_rpn(const RunConfig& cfg, std::ostream* progress) {
  const ModelConfig mc = model_config_from(cfg);
  const AnchorGrid anchors = anchor_grid_from(mc);
  const auto scenes = load_split(cfg, "train");

  fs::create_directories(cfg.out_dir());
  cfg.write_echo(cfg.out_dir() / "run.cfg");
  std::ofstream loss_log(cfg.out_dir() / "loss.txt");

  TrainRpnResult res;
  res.checkpoint = cfg.out_dir() / "rpn.ckpt";
  Rng rng(cfg.seed());
  rpn_init(res.params, mc, rng);

  const double base_lr = cfg.getf("train.lr");
  SgdOptimizer opt(base_lr, cfg.getf("train.momentum"));
  const int iters = cfg.geti("train.iters");
  const int warmup = cfg.geti("train.warmup");
  const int ckpt_every = cfg.geti("train.checkpoint_every");

  // Deterministic epoch shuffling.
  Rng order_rng(cfg.seed() ^ 0x5b5ad4a1151ULL);
  std::vector<int> order(scenes.size());
  std::iota(order.begin(), order.end(), 0);
  auto reshuffle = [&] {
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(order_rng.uniform_int(i + 1))]);
  };
  reshuffle();

  const auto t0 = std::chrono::steady_clock::now();
  bool saved_any = false;
  for (int it = 0; it < iters; ++it) {
    const int idx = order[static_cast<std::size_t>(it) % order.size()];
    if (it > 0 && it % static_cast<int>(order.size()) == 0) reshuffle();
    const LoadedScene& scene = scenes[static_cast<std::size_t>(idx)];

    Tape tape;
    for (auto& [name, t] : res.params.entries())
      if (t->requires_grad) t->zero_grad();
    const auto outputs = rpn_forward(tape, scene_tensor(scene.image), res.params, mc, true);
    const auto targets = make_rpn_targets(mc, anchors, scene.gts);
    const auto terms = rpn_loss(tape, outputs, targets, mc);

    if (!std::isfinite(terms.total->data[0])) {
      res.diverged = true;
      if (progress)
        *progress << "loss diverged at iteration " << it << "; keeping "
                  << (saved_any ? "the last checkpoint" : "no checkpoint") << "\n";
      break;
    }
    tape.backward(terms.total);
    // Linear warmup from a tenth of the base rate.
    opt.set_lr(it < warmup ? base_lr * (0.1 + 0.9 * (it + 1) / warmup) : base_lr);
    opt.step(res.params);
    res.completed_iters = it + 1;

    char line[256];
    double cls_terms[4] = {0, 0, 0, 0};
    for (std::size_t k = 0; k < terms.cls.size() && k < 4; ++k)
      if (terms.cls[k]) cls_terms[k] = terms.cls[k]->data[0];
    std::snprintf(line, sizeof line, "%d %.6g %.6g %.6g %.6g %.6g %.6g %.6g\n", it,
                  terms.total->data[0], cls_terms[0], cls_terms[1], cls_terms[2], cls_terms[3],
                  terms.bbox ? terms.bbox->data[0] : 0.0, terms.seg ? terms.seg->data[0] : 0.0);
    loss_log << line;
    if ((it + 1) % ckpt_every == 0 || it + 1 == iters) {
      save_checkpoint(res.checkpoint, res.params);
      saved_any = true;
    }
    if (progress && ((it + 1) % 100 == 0 || it + 1 == iters))
      *progress << "iter " << (it + 1) << "/" << iters << " loss " << terms.total->data[0] << "\n";
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!res.diverged) save_checkpoint(res.checkpoint, res.params);
  return res;
}

namespace {

std::vector<std::vector<Proposal>> proposals_for(const std::vector<LoadedScene>& scenes,
                                                 const ParamStore& params, const ModelConfig& mc,
                                                 const AnchorGrid& anchors, double nms_thr,
                                                 int max_proposals, int id_base) {
  std::vector<std::vector<Proposal>> out(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto outputs = forward_scene(scenes[i], params, mc);
    const auto dets =
        decode_detections(*outputs.cls_logits.back(), *outputs.bbox, anchors, mc.image_size,
                          mc.image_size, id_base + static_cast<int>(i), mc.num_phases);
    auto kept = nms(dets, nms_thr);
    if (max_proposals > 0 && static_cast<int>(kept.size()) > max_proposals)
      kept.resize(static_cast<std::size_t>(max_proposals));
    for (const Detection& d : kept) out[i].push_back({d.box, d.score, d.image_id});
  }
  return out;
}

}  // namespace

std::vector<std::vector<Proposal>> rpn_proposals(const RunConfig& cfg, const ParamStore& rpn_params,
                                                 const std::string& split) {
  const ModelConfig mc = model_config_from(cfg);
  const AnchorGrid anchors = anchor_grid_from(mc);
  const auto scenes = load_split(cfg, split);
  const int base = split == "test" ? cfg.geti("data.train_count") : 0;
  return proposals_for(scenes, rpn_params, mc, anchors, cfg.getf("eval.nms"),
                       cfg.geti("rcnn.max_proposals"), base);
}

ParamStore train_rcnn(const RunConfig& cfg, const ParamStore& rpn_params, std::ostream* progress) {
  const ModelConfig mc = model_config_from(cfg);
  const RcnnConfig rc = rcnn_config_from(cfg);
  const auto scenes = load_split(cfg, "train");
  const AnchorGrid anchors = anchor_grid_from(mc);

  // Frozen proposals, hard-suppressed before any second-stage processing.
  const auto all_props = proposals_for(scenes, rpn_params, mc, anchors, cfg.getf("eval.nms"),
                                       cfg.geti("rcnn.max_proposals"), 0);

  struct Sample {
    int scene;
    Box box;
    double rpn_score;
    int label;
    int gt;  // matched ground truth (foreground only)
  };
  std::vector<Sample> fg_pool, bg_pool;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    for (const Proposal& p : hard_suppress(all_props[i], rc.z)) {
      double best = 0.0;
      int best_gt = -1;
      for (std::size_t j = 0; j < scenes[i].gts.size(); ++j) {
        const double v = iou(p.box, scenes[i].gts[j]);
        if (v > best) {
          best = v;
          best_gt = static_cast<int>(j);
        }
      }
      Sample s{static_cast<int>(i), p.box, p.score, best >= rc.fg_iou ? 1 : 0,
               best >= rc.fg_iou ? best_gt : -1};
      (s.label ? fg_pool : bg_pool).push_back(s);
    }
  }
  if (progress)
    *progress << "rcnn pools: " << fg_pool.size() << " foreground, " << bg_pool.size()
              << " background proposals\n";
  if (fg_pool.empty() || bg_pool.empty())
    throw std::runtime_error("rcnn training requires both foreground and background proposals");

  ParamStore params;
  Rng rng(cfg.seed() ^ 0x5ec0da7eULL);
  rcnn_init(params, rc, rng);
  SgdOptimizer opt(cfg.getf("rcnn.lr"), cfg.getf("train.momentum"));
  const int iters = cfg.geti("rcnn.iters");
  const int batch = cfg.geti("rcnn.batch");
  const int g = rc.seg_grid();

  std::ofstream loss_log(cfg.out_dir() / "rcnn_loss.txt");
  for (int it = 0; it < iters; ++it) {
    std::vector<const Sample*> picked;
    for (int i = 0; i < batch; ++i) {
      const bool fg = rng.uniform() < 0.5;
      const auto& pool = fg ? fg_pool : bg_pool;
      picked.push_back(&pool[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(pool.size())))]);
    }
    auto crops = Tensor::make({batch, 3, rc.crop_size, rc.crop_size});
    auto seg_labels = Tensor::make({batch, 1, g, g});
    std::vector<int> labels(static_cast<std::size_t>(batch));
    std::vector<double> weights(static_cast<std::size_t>(batch));
    std::vector<double> scores(static_cast<std::size_t>(batch));
    for (int i = 0; i < batch; ++i) {
      const Sample& s = *picked[static_cast<std::size_t>(i)];
      const auto& scene = scenes[static_cast<std::size_t>(s.scene)];
      const auto crop = extract_crop(*scene_tensor(scene.image), s.box, rc.crop_size);
      std::copy(crop->data.begin(), crop->data.end(),
                crops->data.begin() + static_cast<std::size_t>(i) * crop->numel());
      labels[static_cast<std::size_t>(i)] = s.label;
      weights[static_cast<std::size_t>(i)] =
          rc.height_weighting ? height_weight(s.box, mc.image_size) : 1.0;
      scores[static_cast<std::size_t>(i)] = s.rpn_score;
      if (s.label)
        for (int r = 0; r < g; ++r)
          for (int c = 0; c < g; ++c) {
            const double x = s.box.x1 + (c + 0.5) * s.box.width() / g;
            const double y = s.box.y1 + (r + 0.5) * s.box.height() / g;
            const Box& gt = scenes[static_cast<std::size_t>(s.scene)].gts[static_cast<std::size_t>(s.gt)];
            seg_labels->at4(i, 0, r, c) =
                (x >= gt.x1 && x < gt.x2 && y >= gt.y1 && y < gt.y2) ? 1.0 : 0.0;
          }
    }

    Tape tape;
    for (auto& [name, t] : params.entries())
      if (t->requires_grad) t->zero_grad();
    const auto outputs = rcnn_forward(tape, crops, params);
    const auto loss = rcnn_loss(tape, outputs, labels, weights, seg_labels, scores, rc.z);
    if (!std::isfinite(loss->data[0])) {
      if (progress) *progress << "rcnn loss diverged at iteration " << it << "\n";
      break;
    }
    tape.backward(loss);
    opt.step(params);
    loss_log << it << " " << loss->data[0] << "\n";
  }
  save_checkpoint(cfg.out_dir() / "rcnn.ckpt", params);
  return params;
}

namespace {

// Re-scores hard-suppression survivors with the fused RPN/R-CNN score.
std::vector<Detection> fuse_detections(const LoadedScene& scene,
                                       const std::vector<Proposal>& props,
                                       const ParamStore& rcnn_params, const RcnnConfig& rc,
                                       int image_id) {
  const auto survivors = hard_suppress(props, rc.z);
  std::vector<Detection> out;
  if (survivors.empty()) return out;
  auto crops = Tensor::make({static_cast<int>(survivors.size()), 3, rc.crop_size, rc.crop_size});
  const auto img = scene_tensor(scene.image);
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    const auto crop = extract_crop(*img, survivors[i].box, rc.crop_size);
    std::copy(crop->data.begin(), crop->data.end(), crops->data.begin() + i * crop->numel());
  }
  const auto scores = rcnn_scores(rcnn_params, crops);
  for (std::size_t i = 0; i < survivors.size(); ++i)
    out.push_back({survivors[i].box, fuse_scores(survivors[i].score, scores[i], rc.fusion),
                   image_id, 0});
  return out;
}

}  // namespace

PhaseCurves evaluate_run(const RunConfig& cfg, const ParamStore& rpn_params,
                         const ParamStore* rcnn_params) {
  const ModelConfig mc = model_config_from(cfg);
  const AnchorGrid anchors = anchor_grid_from(mc);
  const auto scenes = load_split(cfg, "test");
  const int id_base = cfg.geti("data.train_count");
  const double nms_thr = cfg.getf("eval.nms");
  const RcnnConfig rc = rcnn_config_from(cfg);

  const auto phases = predicting_phases(mc);
  std::vector<std::vector<std::vector<Detection>>> per_phase(phases.size());
  for (auto& v : per_phase) v.resize(scenes.size());
  std::vector<std::vector<Detection>> fused(scenes.size());
  std::vector<std::vector<Box>> gts(scenes.size());

  for (std::size_t i = 0; i < scenes.size(); ++i) {
    gts[i] = scenes[i].gts;
    const auto outputs = forward_scene(scenes[i], rpn_params, mc);
    const int image_id = id_base + static_cast<int>(i);
    for (std::size_t pi = 0; pi < phases.size(); ++pi) {
      const auto& logits = outputs.cls_logits[static_cast<std::size_t>(phases[pi] - 1)];
      const auto dets =
          decode_detections(*logits, *outputs.bbox, anchors, mc.image_size, mc.image_size,
                            image_id, phases[pi]);
      per_phase[pi][i] = nms(dets, nms_thr);
    }
    if (rcnn_params) {
      std::vector<Proposal> props;
      auto kept = per_phase.back()[i];
      if (cfg.geti("rcnn.max_proposals") > 0 &&
          static_cast<int>(kept.size()) > cfg.geti("rcnn.max_proposals"))
        kept.resize(static_cast<std::size_t>(cfg.geti("rcnn.max_proposals")));
      for (const Detection& d : kept) props.push_back({d.box, d.score, d.image_id});
      fused[i] = fuse_detections(scenes[i], props, *rcnn_params, rc, image_id);
    } else {
      fused[i] = per_phase.back()[i];
    }
  }

  PhaseCurves out;
  out.phases = phases;
  const double lo = cfg.getf("eval.fppi_lo"), hi = cfg.getf("eval.fppi_hi");
  const double match_iou = cfg.getf("eval.match_iou");
  fs::create_directories(cfg.out_dir());
  for (std::size_t pi = 0; pi < phases.size(); ++pi) {
    out.curves.push_back(evaluate(per_phase[pi], gts, lo, hi, match_iou));
    write_curve(cfg.out_dir() / ("curve_phase" + std::to_string(phases[pi]) + ".txt"),
                out.curves.back());
  }
  out.fused = evaluate(fused, gts, lo, hi, match_iou);
  write_curve(cfg.out_dir() / "curve_fused.txt", out.fused);
  return out;
}

ProfileReport peak_profiles(const RunConfig& cfg, const ParamStore& rpn_params) {
  const ModelConfig mc = model_config_from(cfg);
  const auto scenes = load_split(cfg, "test");
  const auto phases = predicting_phases(mc);
  std::vector<PeakProfileAccum> accums(phases.size());
  for (const auto& scene : scenes) {
    if (scene.gts.empty()) continue;
    const auto outputs = forward_scene(scene, rpn_params, mc);
    for (std::size_t pi = 0; pi < phases.size(); ++pi) {
      const auto map = foreground_max_map(*outputs.cls_logits[static_cast<std::size_t>(phases[pi] - 1)]);
      accums[pi].add(map, scene.gts, 16);
    }
  }
  ProfileReport rep;
  rep.phases = phases;
  for (auto& a : accums) rep.profiles.push_back(a.finalize());
  return rep;
}

void analyze_run(const RunConfig& cfg, const ParamStore& rpn_params) {
  const ModelConfig mc = model_config_from(cfg);
  const auto scenes = load_split(cfg, "test");
  const auto phases = predicting_phases(mc);
  const fs::path dir = cfg.out_dir() / "analysis";
  fs::create_directories(dir);
  const double thr = cfg.getf("analyze.threshold");

  const int n_imgs = std::min<int>(cfg.geti("analyze.images"), static_cast<int>(scenes.size()));
  for (int i = 0; i < n_imgs; ++i) {
    const auto outputs = forward_scene(scenes[static_cast<std::size_t>(i)], rpn_params, mc);
    std::vector<ScoreMap> maps;
    for (int k : phases) {
      maps.push_back(foreground_max_map(*outputs.cls_logits[static_cast<std::size_t>(k - 1)]));
      char name[64];
      std::snprintf(name, sizeof name, "img%03d_p%d.ppm", i, k);
      write_ppm(dir / name, render_score_map(maps.back(), 16));
    }
    if (maps.size() >= 2) {
      const auto delta = phase_disagreement(maps.front(), maps.back(), thr);
      char name[64];
      std::snprintf(name, sizeof name, "img%03d_delta.ppm", i);
      write_ppm(dir / name, render_disagreement(delta, maps.front().rows, maps.front().cols, 16));
    }
  }

  const auto rep = peak_profiles(cfg, rpn_params);
  std::ofstream prof(cfg.out_dir() / "profiles.txt");
  char line[96];
  for (std::size_t pi = 0; pi < rep.phases.size(); ++pi) {
    for (int j = 0; j < kProfileSamples; ++j) {
      std::snprintf(line, sizeof line, "%d x %d %.6g\n", rep.phases[pi], j,
                    rep.profiles[pi].x[static_cast<std::size_t>(j)]);
      prof << line;
    }
    for (int j = 0; j < kProfileSamples; ++j) {
      std::snprintf(line, sizeof line, "%d y %d %.6g\n", rep.phases[pi], j,
                    rep.profiles[pi].y[static_cast<std::size_t>(j)]);
      prof << line;
    }
    std::snprintf(line, sizeof line, "%d peakiness %.6g\n", rep.phases[pi],
                  profile_peakiness(rep.profiles[pi]));
    prof << line;
  }

  std::ofstream macs(cfg.out_dir() / "macs.txt");
  macs << mac_table(cfg);
}

std::string mac_table(const RunConfig& cfg) {
  std::ostringstream os;
  char line[128];
  os << "# variant phases widths gmacs\n";

  // Paper-scale grid at VGG-like backbone widths and 640x480 input.
  auto paper_cfg = [&](int phases, char size) {
    ModelConfig pc;
    pc.image_size = 640;
    pc.backbone_widths = {64, 128, 256, 512, 512};
    pc.pfe_width = 512;
    pc.num_phases = phases;
    pc.anchor_heights = cfg.list("anchors.heights");
    pc.anchor_aspect = cfg.getf("anchors.aspect");
    pc.policies.assign(static_cast<std::size_t>(phases), 0.5);
    pc.lambda_cls.assign(static_cast<std::size_t>(phases), 1.0);
    for (int k = 2; k <= phases; ++k) {
      const int t = k == 2 ? 3 : 4;
      pc.stacks.push_back(size == 'S'   ? widths_small(t)
                          : size == 'L' ? widths_large(t)
                                        : widths_medium(t));
    }
    return pc;
  };
  for (char sz : {'S', 'M', 'L'}) {
    const auto pc = paper_cfg(3, sz);
    const auto rep = count_macs(pc, 640, 480);
    std::snprintf(line, sizeof line, "width_%c 3 %c %.4f\n", sz, sz, rep.total / 1e9);
    os << line;
  }
  for (int phases = 1; phases <= 4; ++phases) {
    const auto pc = paper_cfg(phases, 'M');
    const auto rep = count_macs(pc, 640, 480);
    std::snprintf(line, sizeof line, "phases_%d %d M %.4f\n", phases, phases, rep.total / 1e9);
    os << line;
  }
  // The configured desk model at its own resolution.
  const ModelConfig mc = model_config_from(cfg);
  const auto rep = count_macs(mc, mc.image_size, mc.image_size);
  std::snprintf(line, sizeof line, "desk %d - %.4f\n", mc.num_phases, rep.total / 1e9);
  os << line;
  return os.str();
}

std::vector<AblateRow> ablate_run(const RunConfig& cfg, std::ostream* progress) {
  // Variant spec: `name: key=value | key=value ; name2: ...`
  const std::string spec = cfg.str("ablate.variants");
  std::vector<AblateRow> rows;
  std::stringstream ss(spec);
  std::string entry;
  fs::create_directories(cfg.out_dir());
  std::ofstream table(cfg.out_dir() / "ablate.txt");
  while (std::getline(ss, entry, ';')) {
    const auto colon = entry.find(':');
    if (colon == std::string::npos) continue;
    AblateRow row;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    row.name = trim(entry.substr(0, colon));
    try {
      RunConfig variant = cfg;
      std::stringstream ds(entry.substr(colon + 1));
      std::string delta;
      while (std::getline(ds, delta, '|')) {
        delta = trim(delta);
        if (delta.empty()) continue;
        const auto eq = delta.find('=');
        if (eq == std::string::npos)
          throw std::invalid_argument("variant delta must be key=value: " + delta);
        variant.set(trim(delta.substr(0, eq)), trim(delta.substr(eq + 1)));
      }
      if (cfg.geti("ablate.iters") > 0)
        variant.set("train.iters", std::to_string(cfg.geti("ablate.iters")));
      variant.set("run.out", (cfg.out_dir() / "ablate" / row.name).string());
      if (progress) *progress << "ablate variant " << row.name << "\n";
      const auto trained = train_rpn(variant, progress);
      if (trained.diverged) throw std::runtime_error("training diverged");
      const auto curves = evaluate_run(variant, trained.params, nullptr);
      row.log_avg_mr = curves.curves.back().log_avg_mr;
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(row);
    if (row.ok)
      table << row.name << " " << row.log_avg_mr << "\n";
    else
      table << row.name << " failed: " << row.error << "\n";
  }
  return rows;
}

std::vector<Detection> infer_run(const RunConfig& cfg, const ParamStore& rpn_params,
                                 const ParamStore* rcnn_params) {
  const ModelConfig mc = model_config_from(cfg);
  const AnchorGrid anchors = anchor_grid_from(mc);
  const auto scenes = load_split(cfg, "test");
  const int id_base = cfg.geti("data.train_count");
  const RcnnConfig rc = rcnn_config_from(cfg);
  std::vector<Detection> all;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto outputs = forward_scene(scenes[i], rpn_params, mc);
    const int image_id = id_base + static_cast<int>(i);
    const auto dets = decode_detections(*outputs.cls_logits.back(), *outputs.bbox, anchors,
                                        mc.image_size, mc.image_size, image_id, mc.num_phases);
    auto kept = nms(dets, cfg.getf("eval.nms"));
    if (rcnn_params) {
      std::vector<Proposal> props;
      for (const Detection& d : kept) props.push_back({d.box, d.score, d.image_id});
      kept = fuse_detections(scenes[i], props, *rcnn_params, rc, image_id);
    }
    all.insert(all.end(), kept.begin(), kept.end());
  }
  return all;
}

}  // namespace ardet
