#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ardet/model_config.hpp"
#include "ardet/second_stage.hpp"
#include "ardet/synthdata.hpp"

namespace ardet {

// Flat `key = value` run configuration with a fixed key registry; unknown
// keys are rejected. The effective configuration is echoed to run.cfg in the
// output directory so a run can be reproduced bit for bit.
class RunConfig {
 public:
  RunConfig();  // defaults

  static RunConfig from_file(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);

  const std::string& str(const std::string& key) const;
  int geti(const std::string& key) const;
  double getf(const std::string& key) const;
  bool getb(const std::string& key) const;
  std::vector<double> list(const std::string& key) const;
  std::vector<int> ilist(const std::string& key) const;

  std::uint64_t seed() const { return static_cast<std::uint64_t>(geti("run.seed")); }
  std::filesystem::path out_dir() const { return str("run.out"); }
  std::filesystem::path data_dir() const { return str("data.dir"); }

  void echo(std::ostream& os) const;
  void write_echo(const std::filesystem::path& path) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

ModelConfig model_config_from(const RunConfig& cfg);
SceneConfig scene_config_from(const RunConfig& cfg);
RcnnConfig rcnn_config_from(const RunConfig& cfg);
AnchorGrid anchor_grid_from(const ModelConfig& cfg);

}  // namespace ardet
