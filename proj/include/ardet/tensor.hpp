#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace ardet {

struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense row-major double tensor. 4-D activations use (batch, channels,
// height, width) order. grad, when allocated, always mirrors data's extent.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, double fill = 0.0);

  std::size_t numel() const { return data.size(); }
  bool is_scalar() const { return data.size() == 1; }

  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  int ndim() const { return static_cast<int>(shape.size()); }

  // 4-D accessors for tests and slow paths.
  double& at4(int b, int c, int y, int x);
  double at4(int b, int c, int y, int x) const;

  void ensure_grad();
  void zero_grad();
  bool grad_present() const { return grad.size() == data.size(); }

  // True when every data value is finite.
  bool all_finite() const;

  static TensorPtr make(std::vector<int> shape, double fill = 0.0);
  static TensorPtr scalar(double v);
  static TensorPtr from(std::vector<int> shape, std::vector<double> values);
  static TensorPtr param(std::vector<int> shape);  // requires_grad, grad allocated
};

std::size_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);
bool same_shape(const Tensor& a, const Tensor& b);

}  // namespace ardet
