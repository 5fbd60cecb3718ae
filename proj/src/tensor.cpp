#include "ardet/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ardet {

std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative extent in shape " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

Tensor::Tensor(std::vector<int> s, double fill)
    : shape(std::move(s)), data(shape_numel(shape), fill) {}

double& Tensor::at4(int b, int c, int y, int x) {
  const int C = shape[1], H = shape[2], W = shape[3];
  return data[static_cast<std::size_t>(((b * C + c) * H + y) * W + x)];
}

double Tensor::at4(int b, int c, int y, int x) const {
  const int C = shape[1], H = shape[2], W = shape[3];
  return data[static_cast<std::size_t>(((b * C + c) * H + y) * W + x)];
}

void Tensor::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() { grad.assign(grad.size(), 0.0); }

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

TensorPtr Tensor::make(std::vector<int> shape, double fill) {
  return std::make_shared<Tensor>(std::move(shape), fill);
}

TensorPtr Tensor::scalar(double v) {
  auto t = std::make_shared<Tensor>(std::vector<int>{1});
  t->data[0] = v;
  return t;
}

TensorPtr Tensor::from(std::vector<int> shape, std::vector<double> values) {
  if (shape_numel(shape) != values.size())
    throw std::invalid_argument("value count does not match shape " + shape_str(shape));
  auto t = std::make_shared<Tensor>(std::move(shape));
  t->data = std::move(values);
  return t;
}

TensorPtr Tensor::param(std::vector<int> shape) {
  auto t = std::make_shared<Tensor>(std::move(shape));
  t->requires_grad = true;
  t->ensure_grad();
  return t;
}

}  // namespace ardet
