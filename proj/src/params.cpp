#include "ardet/params.hpp"

#include <cmath>
#include <stdexcept>

namespace ardet {

TensorPtr ParamStore::create(const std::string& name, std::vector<int> shape, bool trainable) {
  if (entries_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  auto t = trainable ? Tensor::param(std::move(shape)) : Tensor::make(std::move(shape));
  entries_[name] = t;
  return t;
}

TensorPtr ParamStore::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& [name, t] : entries_)
    if (t->requires_grad) t->zero_grad();
}

int ParamStore::phase_of(const std::string& name) {
  if (name.size() < 3 || name[0] != 'p') return -1;
  std::size_t i = 1;
  while (i < name.size() && name[i] >= '0' && name[i] <= '9') ++i;
  if (i == 1 || i >= name.size() || name[i] != '.') return -1;
  return std::stoi(name.substr(1, i - 1));
}

void SgdOptimizer::step(ParamStore& params) {
  for (auto& [name, t] : params.entries()) {
    if (!t->requires_grad) continue;
    if (!t->grad_present())
      throw std::runtime_error("sgd step: parameter '" + name + "' has no populated gradient");
    auto& v = velocity_[name];
    if (v.size() != t->numel()) v.assign(t->numel(), 0.0);
    for (std::size_t i = 0; i < t->numel(); ++i) {
      v[i] = momentum_ * v[i] + t->grad[i];
      t->data[i] -= lr_ * v[i];
    }
  }
}

void init_he_uniform(Tensor& t, int fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : t.data) v = rng.uniform(-limit, limit);
}

void init_normal(Tensor& t, double sigma, Rng& rng) {
  for (auto& v : t.data) v = sigma * rng.normal();
}

}  // namespace ardet
