#include "ardet/model_config.hpp"

namespace ardet {

void ModelConfig::validate() const {
  if (image_size <= 0 || image_size % 16 != 0)
    throw std::invalid_argument("image size must be a positive multiple of 16");
  if (backbone_widths.size() != 5)
    throw std::invalid_argument("backbone needs widths for stride levels 1..5");
  if (num_phases < 1) throw std::invalid_argument("at least one phase is required");
  if (static_cast<int>(stacks.size()) != num_phases - 1)
    throw std::invalid_argument("expected " + std::to_string(num_phases - 1) +
                                " de-encoder stacks for " + std::to_string(num_phases) + " phases");
  int prev_t = 3;
  for (std::size_t s = 0; s < stacks.size(); ++s) {
    const auto& st = stacks[s];
    if (st.target_stride < 3 || st.target_stride > 5)
      throw std::invalid_argument("target stride must be in [3, 5]");
    if (s > 0 && st.target_stride < prev_t)
      throw std::invalid_argument("a phase cannot decode below its predecessor's target stride");
    if (static_cast<int>(st.widths.size()) != 5 - st.target_stride + 1)
      throw std::invalid_argument("phase " + std::to_string(s + 2) + " needs " +
                                  std::to_string(5 - st.target_stride + 1) + " channel widths");
    for (int w : st.widths)
      if (w <= 0) throw std::invalid_argument("channel widths must be positive");
    prev_t = st.target_stride;
  }
  if (anchor_heights.empty()) throw std::invalid_argument("at least one anchor height is required");
  if (static_cast<int>(policies.size()) != num_phases)
    throw std::invalid_argument("one labeling policy per phase is required (" +
                                std::to_string(num_phases) + " phases, " +
                                std::to_string(policies.size()) + " policies)");
  for (double h : policies)
    if (!(h > 0.0 && h <= 1.0)) throw std::invalid_argument("labeling policies must be in (0, 1]");
  if (static_cast<int>(lambda_cls.size()) != num_phases)
    throw std::invalid_argument("one classification loss weight per phase is required");
}

ModelConfig::DeEncoderSpec widths_small(int target_stride) {
  ModelConfig::DeEncoderSpec s;
  s.target_stride = target_stride;
  const int all[] = {64, 128, 256};
  for (int i = target_stride; i <= 5; ++i) s.widths.push_back(all[i - 3]);
  return s;
}

ModelConfig::DeEncoderSpec widths_medium(int target_stride) {
  ModelConfig::DeEncoderSpec s;
  s.target_stride = target_stride;
  const int all[] = {128, 256, 512};
  for (int i = target_stride; i <= 5; ++i) s.widths.push_back(all[i - 3]);
  return s;
}

ModelConfig::DeEncoderSpec widths_large(int target_stride) {
  ModelConfig::DeEncoderSpec s;
  s.target_stride = target_stride;
  const int all[] = {256, 512, 512};
  for (int i = target_stride; i <= 5; ++i) s.widths.push_back(all[i - 3]);
  return s;
}

}  // namespace ardet
