#pragma once

#include <map>
#include <string>
#include <vector>

#include "ardet/rng.hpp"
#include "ardet/tensor.hpp"

namespace ardet {

// Named parameter tensors. Phase ownership is encoded in the name prefix
// ("p2.lat3.w" belongs to phase 2); phases never share parameters.
// Non-trainable buffers (normalization running statistics) live in the same
// store so checkpoints capture them.
class ParamStore {
 public:
  TensorPtr create(const std::string& name, std::vector<int> shape, bool trainable = true);
  TensorPtr get(const std::string& name) const;
  bool has(const std::string& name) const { return entries_.count(name) != 0; }

  const std::map<std::string, TensorPtr>& entries() const { return entries_; }
  std::map<std::string, TensorPtr>& entries() { return entries_; }

  void zero_grads();

  // Phase index from a "p<k>." prefix, or -1 for unphased names.
  static int phase_of(const std::string& name);

 private:
  std::map<std::string, TensorPtr> entries_;
};

// v <- momentum * v + grad; p <- p - lr * v, for every trainable parameter.
// A trainable parameter without a populated gradient is rejected.
class SgdOptimizer {
 public:
  SgdOptimizer(double lr, double momentum) : lr_(lr), momentum_(momentum) {}
  void step(ParamStore& params);
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_;
  double momentum_;
  std::map<std::string, std::vector<double>> velocity_;
};

// He-uniform fan-in initialization for convolution / affine weights.
void init_he_uniform(Tensor& t, int fan_in, Rng& rng);

// Small-sigma Gaussian initialization for prediction heads, keeping initial
// logits near zero.
void init_normal(Tensor& t, double sigma, Rng& rng);

}  // namespace ardet
