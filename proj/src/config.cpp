#include "ardet/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ardet {

namespace {

const std::map<std::string, std::string>& default_values() {
  static const std::map<std::string, std::string> defaults = {
      {"run.seed", "1"},
      {"run.out", "out"},
      {"data.dir", "data"},
      {"data.image_size", "160"},
      {"data.train_count", "300"},
      {"data.test_count", "100"},
      {"data.ped_min", "1"},
      {"data.ped_max", "4"},
      {"data.height_min", "24"},
      {"data.height_max", "96"},
      {"data.aspect_mean", "0.41"},
      {"data.aspect_jitter", "0.05"},
      {"data.occlusion_prob", "0.25"},
      {"data.clutter", "14"},
      {"backbone.widths", "8,16,32,64,128"},
      {"phase2.target_stride", "3"},
      {"phase2.widths", "16,32,64"},
      {"phase3.target_stride", "4"},
      {"phase3.widths", "32,64"},
      {"phase4.target_stride", "4"},
      {"phase4.widths", "32,64"},
      {"resample.mode", "fused"},
      {"bn.enabled", "true"},
      {"rpn.num_phases", "3"},
      {"rpn.pfe_width", "64"},
      {"rpn.lambda", "0.1,0.1,1"},
      {"rpn.lambda_bbox", "5"},
      {"rpn.lambda_seg", "1"},
      {"rpn.policies", "0.4,0.5,0.6"},
      {"rpn.autoregressive", "true"},
      {"rpn.bbox_h", "final"},
      {"rpn.class_balance", "true"},
      {"anchors.heights", "32,64,128"},
      {"anchors.aspect", "0.41"},
      {"labels.bg_ceiling", "0.3"},
      {"labels.force_best_match", "true"},
      {"train.iters", "1200"},
      {"train.lr", "0.02"},
      {"train.momentum", "0.9"},
      {"train.warmup", "50"},
      {"train.checkpoint_every", "100"},
      {"rcnn.enabled", "true"},
      {"rcnn.z", "0.005"},
      {"rcnn.h", "0.7"},
      {"rcnn.fusion", "geo"},
      {"rcnn.crop", "32"},
      {"rcnn.weighting", "false"},
      {"rcnn.iters", "250"},
      {"rcnn.lr", "0.01"},
      {"rcnn.batch", "16"},
      {"rcnn.max_proposals", "40"},
      {"eval.nms", "0.5"},
      {"eval.match_iou", "0.5"},
      {"eval.fppi_lo", "0.01"},
      {"eval.fppi_hi", "1"},
      {"analyze.images", "4"},
      {"analyze.threshold", "0.5"},
      {"ablate.iters", "0"},
      {"ablate.variants",
       "lenient_strict: ; "
       "strict_lenient: rpn.policies=0.6,0.5,0.4 ; "
       "moderate_moderate: rpn.policies=0.5,0.5,0.5 ; "
       "strict_strict: rpn.policies=0.6,0.6,0.6 ; "
       "no_autoregressive: rpn.autoregressive=false ; "
       "two_step: resample.mode=two_step"},
  };
  return defaults;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig::RunConfig() : values_(default_values()) {}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path.string());
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected `key = value`");
    cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) throw std::invalid_argument("unknown config key: " + key);
  values_[key] = value;
}

const std::string& RunConfig::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("unknown config key: " + key);
  return it->second;
}

int RunConfig::geti(const std::string& key) const {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(str(key), &pos);
    if (pos != str(key).size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + " is not an integer: " + str(key));
  }
}

double RunConfig::getf(const std::string& key) const {
  try {
    std::size_t pos = 0;
    const double v = std::stod(str(key), &pos);
    if (pos != str(key).size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + " is not a number: " + str(key));
  }
}

bool RunConfig::getb(const std::string& key) const {
  const std::string& v = str(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config key " + key + " is not a boolean: " + v);
}

std::vector<double> RunConfig::list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(str(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw std::invalid_argument("config key " + key + " has a non-numeric entry: " + item);
    }
  }
  return out;
}

std::vector<int> RunConfig::ilist(const std::string& key) const {
  std::vector<int> out;
  for (double v : list(key)) out.push_back(static_cast<int>(v));
  return out;
}

void RunConfig::echo(std::ostream& os) const {
  for (const auto& [k, v] : values_) os << k << " = " << v << "\n";
}

void RunConfig::write_echo(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write config echo: " + path.string());
  echo(os);
}

ModelConfig model_config_from(const RunConfig& cfg) {
  ModelConfig mc;
  mc.image_size = cfg.geti("data.image_size");
  mc.backbone_widths = cfg.ilist("backbone.widths");
  mc.num_phases = cfg.geti("rpn.num_phases");
  if (mc.num_phases < 1 || mc.num_phases > 4)
    throw std::invalid_argument("rpn.num_phases must be in [1, 4]");
  for (int k = 2; k <= mc.num_phases; ++k) {
    ModelConfig::DeEncoderSpec s;
    const std::string p = "phase" + std::to_string(k);
    s.target_stride = cfg.geti(p + ".target_stride");
    s.widths = cfg.ilist(p + ".widths");
    mc.stacks.push_back(std::move(s));
  }
  mc.pfe_width = cfg.geti("rpn.pfe_width");
  mc.autoregressive = cfg.getb("rpn.autoregressive");
  const std::string resample = cfg.str("resample.mode");
  if (resample != "fused" && resample != "two_step")
    throw std::invalid_argument("resample.mode must be fused or two_step");
  mc.two_step_resample = resample == "two_step";
  mc.bn_enabled = cfg.getb("bn.enabled");
  mc.anchor_heights = cfg.list("anchors.heights");
  mc.anchor_aspect = cfg.getf("anchors.aspect");
  mc.policies = cfg.list("rpn.policies");
  mc.lambda_cls = cfg.list("rpn.lambda");
  mc.lambda_bbox = cfg.getf("rpn.lambda_bbox");
  mc.lambda_seg = cfg.getf("rpn.lambda_seg");
  mc.bbox_h = cfg.str("rpn.bbox_h") == "final" ? -1.0 : cfg.getf("rpn.bbox_h");
  mc.bg_ceiling = cfg.getf("labels.bg_ceiling");
  mc.force_best_match = cfg.getb("labels.force_best_match");
  mc.class_balance = cfg.getb("rpn.class_balance");
  mc.validate();
  return mc;
}

SceneConfig scene_config_from(const RunConfig& cfg) {
  SceneConfig sc;
  sc.image_size = cfg.geti("data.image_size");
  sc.ped_min = cfg.geti("data.ped_min");
  sc.ped_max = cfg.geti("data.ped_max");
  sc.height_min = cfg.getf("data.height_min");
  sc.height_max = cfg.getf("data.height_max");
  sc.aspect_mean = cfg.getf("data.aspect_mean");
  sc.aspect_jitter = cfg.getf("data.aspect_jitter");
  sc.occlusion_prob = cfg.getf("data.occlusion_prob");
  sc.clutter = cfg.geti("data.clutter");
  sc.seed = cfg.seed();
  return sc;
}

RcnnConfig rcnn_config_from(const RunConfig& cfg) {
  RcnnConfig rc;
  rc.crop_size = cfg.geti("rcnn.crop");
  rc.z = cfg.getf("rcnn.z");
  rc.fg_iou = cfg.getf("rcnn.h");
  rc.height_weighting = cfg.getb("rcnn.weighting");
  rc.fusion = fusion_from_string(cfg.str("rcnn.fusion"));
  return rc;
}

AnchorGrid anchor_grid_from(const ModelConfig& cfg) {
  return make_anchor_grid(cfg.grid_extent(), cfg.grid_extent(), cfg.anchor_heights,
                          cfg.anchor_aspect, 16);
}

}  // namespace ardet
