#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "ardet/checkpoint.hpp"
#include "ardet/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ardet;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<long long> seed;
  std::string out;
  std::string checkpoint;
  std::string rcnn_checkpoint;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration file (key = value lines)");
  cmd->add_option("--set", args.sets, "override a config key, e.g. --set train.iters=50")
      ->take_all();
  cmd->add_option("--seed", args.seed, "override run.seed");
  cmd->add_option("--out", args.out, "override run.out (output directory)");
  cmd->add_option("--checkpoint", args.checkpoint, "proposal-network checkpoint path");
  cmd->add_option("--rcnn-checkpoint", args.rcnn_checkpoint, "second-stage checkpoint path");
}

RunConfig build_config(const CommonArgs& args) {
  RunConfig cfg = args.config_path.empty() ? RunConfig() : RunConfig::from_file(args.config_path);
  for (const std::string& s : args.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got: " + s);
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (args.seed) cfg.set("run.seed", std::to_string(*args.seed));
  if (!args.out.empty()) cfg.set("run.out", args.out);
  return cfg;
}

fs::path rpn_ckpt_path(const CommonArgs& args, const RunConfig& cfg) {
  return args.checkpoint.empty() ? cfg.out_dir() / "rpn.ckpt" : fs::path(args.checkpoint);
}

// Second-stage checkpoint: explicit flag, else the run.out default when the
// second stage is enabled and the file exists.
std::optional<ParamStore> load_rcnn(const CommonArgs& args, const RunConfig& cfg) {
  fs::path p = args.rcnn_checkpoint.empty() ? cfg.out_dir() / "rcnn.ckpt"
                                            : fs::path(args.rcnn_checkpoint);
  if (!args.rcnn_checkpoint.empty() || (cfg.getb("rcnn.enabled") && fs::exists(p)))
    return load_checkpoint(p);
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"autoregressive multi-phase pedestrian detector"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset");
  auto* train = app.add_subcommand("train", "train the proposal network (and second stage)");
  auto* eval = app.add_subcommand("eval", "per-phase and fused miss-rate curves on the test split");
  auto* infer = app.add_subcommand("infer", "write detections for the test split");
  auto* analyze = app.add_subcommand("analyze", "heatmaps, disagreement maps, profiles, MAC table");
  auto* ablate = app.add_subcommand("ablate", "train/evaluate the configured variant sweep");
  auto* macs = app.add_subcommand("macs", "print the MAC comparison table");
  for (auto* cmd : {gen, train, eval, infer, analyze, ablate, macs}) add_common(cmd, args);

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = build_config(args);
    if (gen->parsed()) {
      gen_dataset(cfg);
      std::cout << "dataset written to " << cfg.data_dir().string() << "\n";
    } else if (train->parsed()) {
      const auto res = train_rpn(cfg, &std::cout);
      if (res.diverged) {
        std::cerr << "training aborted: non-finite loss after " << res.completed_iters
                  << " iterations\n";
        return 1;
      }
      std::cout << "rpn trained in " << res.seconds << " s -> " << res.checkpoint.string() << "\n";
      if (cfg.getb("rcnn.enabled")) {
        train_rcnn(cfg, res.params, &std::cout);
        std::cout << "rcnn trained -> " << (cfg.out_dir() / "rcnn.ckpt").string() << "\n";
      }
    } else if (eval->parsed()) {
      const auto rpn = load_checkpoint(rpn_ckpt_path(args, cfg));
      const auto rcnn = load_rcnn(args, cfg);
      cfg.write_echo(cfg.out_dir() / "run.cfg");
      const auto curves = evaluate_run(cfg, rpn, rcnn ? &*rcnn : nullptr);
      for (std::size_t i = 0; i < curves.phases.size(); ++i)
        std::cout << "phase " << curves.phases[i] << " log-avg MR "
                  << (curves.curves[i].defined ? std::to_string(curves.curves[i].log_avg_mr)
                                               : "undefined")
                  << "\n";
      std::cout << "fused log-avg MR "
                << (curves.fused.defined ? std::to_string(curves.fused.log_avg_mr) : "undefined")
                << "\n";
    } else if (infer->parsed()) {
      const auto rpn = load_checkpoint(rpn_ckpt_path(args, cfg));
      const auto rcnn = load_rcnn(args, cfg);
      fs::create_directories(cfg.out_dir());
      const auto dets = infer_run(cfg, rpn, rcnn ? &*rcnn : nullptr);
      write_detections(cfg.out_dir() / "detections.txt", dets);
      std::cout << dets.size() << " detections -> "
                << (cfg.out_dir() / "detections.txt").string() << "\n";
    } else if (analyze->parsed()) {
      const auto rpn = load_checkpoint(rpn_ckpt_path(args, cfg));
      fs::create_directories(cfg.out_dir());
      analyze_run(cfg, rpn);
      std::cout << "analysis artifacts under " << (cfg.out_dir() / "analysis").string() << "\n";
    } else if (ablate->parsed()) {
      const auto rows = ablate_run(cfg, &std::cout);
      for (const auto& r : rows) {
        if (r.ok)
          std::cout << r.name << " log-avg MR " << r.log_avg_mr << "\n";
        else
          std::cout << r.name << " failed: " << r.error << "\n";
      }
    } else if (macs->parsed()) {
      std::cout << mac_table(cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
