#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "ardet/config.hpp"
#include "ardet/eval.hpp"
#include "ardet/rpn.hpp"
#include "ardet/second_stage.hpp"

namespace ardet {

// End-to-end orchestration shared by the CLI and the acceptance suite.

void gen_dataset(const RunConfig& cfg);

struct TrainRpnResult {
  ParamStore params;
  bool diverged = false;
  int completed_iters = 0;
  double seconds = 0.0;
  std::filesystem::path checkpoint;
};

// Trains the proposal network on data.dir/train, writing the loss log and
// checkpoints under run.out. Aborts on a non-finite loss, keeping the last
// good checkpoint.
TrainRpnResult train_rpn(const RunConfig& cfg, std::ostream* progress = nullptr);

// Trains the second-stage classifier on hard-suppressed proposals of the
// frozen proposal network.
ParamStore train_rcnn(const RunConfig& cfg, const ParamStore& rpn_params,
                      std::ostream* progress = nullptr);

// Decoded + NMS'd final-phase proposals per image of a split ("train" or
// "test"), capped at rcnn.max_proposals, before hard suppression.
std::vector<std::vector<Proposal>> rpn_proposals(const RunConfig& cfg, const ParamStore& rpn_params,
                                                 const std::string& split);

struct PhaseCurves {
  std::vector<int> phases;        // phase indices with prediction layers
  std::vector<EvalCurve> curves;  // aligned with phases
  EvalCurve fused;                // second-stage fusion (or final phase when disabled)
};

// Per-phase curves on the test split (each phase decoded with the shared
// final regression map) and the fused curve; writes curve files to run.out.
PhaseCurves evaluate_run(const RunConfig& cfg, const ParamStore& rpn_params,
                         const ParamStore* rcnn_params);

struct ProfileReport {
  std::vector<int> phases;
  std::vector<PeakProfile> profiles;
};

// Center-line score profiles over every test ground truth.
ProfileReport peak_profiles(const RunConfig& cfg, const ParamStore& rpn_params);

// Heatmaps, disagreement maps, profiles and the MAC table under run.out.
void analyze_run(const RunConfig& cfg, const ParamStore& rpn_params);

// MAC comparison across the channel-width and phase-count grid.
std::string mac_table(const RunConfig& cfg);

struct AblateRow {
  std::string name;
  bool ok = false;
  double log_avg_mr = 1.0;
  std::string error;
};

std::vector<AblateRow> ablate_run(const RunConfig& cfg, std::ostream* progress = nullptr);

// Detections of the test split for the CLI `infer` command.
std::vector<Detection> infer_run(const RunConfig& cfg, const ParamStore& rpn_params,
                                 const ParamStore* rcnn_params);

}  // namespace ardet
