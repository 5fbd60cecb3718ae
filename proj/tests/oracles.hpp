#pragma once

// Independent reference implementations used as test oracles. These stay
// deliberately naive and separate from the library kernels they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ardet/eval.hpp"
#include "ardet/targets.hpp"
#include "ardet/tensor.hpp"

namespace oracles {

// Six-nested-loop convolution, zero padding.
inline ardet::TensorPtr conv2d(const ardet::Tensor& x, const ardet::Tensor& w,
                               const std::vector<double>& bias, int stride, int pad) {
  const int B = x.dim(0), IC = x.dim(1), IH = x.dim(2), IW = x.dim(3);
  const int OC = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  const int OH = (IH + 2 * pad - KH) / stride + 1;
  const int OW = (IW + 2 * pad - KW) / stride + 1;
  auto y = ardet::Tensor::make({B, OC, OH, OW});
  for (int b = 0; b < B; ++b)
    for (int oc = 0; oc < OC; ++oc)
      for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox) {
          double acc = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(oc)];
          for (int ic = 0; ic < IC; ++ic)
            for (int ky = 0; ky < KH; ++ky)
              for (int kx = 0; kx < KW; ++kx) {
                const int iy = oy * stride - pad + ky;
                const int ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= IH || ix < 0 || ix >= IW) continue;
                acc += x.at4(b, ic, iy, ix) * w.at4(oc, ic, ky, kx);
              }
          y->at4(b, oc, oy, ox) = acc;
        }
  return y;
}

// Direct summation transposed convolution: scatter every input element
// through the kernel.
inline ardet::TensorPtr tconv2d(const ardet::Tensor& x, const ardet::Tensor& w,
                                const std::vector<double>& bias, int up, int pad) {
  const int B = x.dim(0), IC = x.dim(1), IH = x.dim(2), IW = x.dim(3);
  const int OC = w.dim(1), KH = w.dim(2), KW = w.dim(3);
  const int OH = (IH - 1) * up - 2 * pad + KH;
  const int OW = (IW - 1) * up - 2 * pad + KW;
  auto y = ardet::Tensor::make({B, OC, OH, OW});
  for (int b = 0; b < B; ++b)
    for (int oc = 0; oc < OC; ++oc)
      for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox)
          y->at4(b, oc, oy, ox) = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(oc)];
  for (int b = 0; b < B; ++b)
    for (int ic = 0; ic < IC; ++ic)
      for (int iy = 0; iy < IH; ++iy)
        for (int ix = 0; ix < IW; ++ix)
          for (int oc = 0; oc < OC; ++oc)
            for (int ky = 0; ky < KH; ++ky)
              for (int kx = 0; kx < KW; ++kx) {
                const int oy = iy * up - pad + ky;
                const int ox = ix * up - pad + kx;
                if (oy < 0 || oy >= OH || ox < 0 || ox >= OW) continue;
                y->at4(b, oc, oy, ox) += x.at4(b, ic, iy, ix) * w.at4(ic, oc, ky, kx);
              }
  return y;
}

// Central finite difference of a scalar-valued function at x.
inline double finite_diff(std::vector<double>& x, std::size_t i,
                          const std::function<double()>& eval, double step = 1e-5) {
  const double saved = x[i];
  x[i] = saved + step;
  const double hi = eval();
  x[i] = saved - step;
  const double lo = eval();
  x[i] = saved;
  return (hi - lo) / (2.0 * step);
}

// Unit-cell center counting on the integer lattice; exact for integer boxes.
inline double grid_iou(const ardet::Box& a, const ardet::Box& b) {
  const int lo_x = static_cast<int>(std::floor(std::min(a.x1, b.x1)));
  const int hi_x = static_cast<int>(std::ceil(std::max(a.x2, b.x2)));
  const int lo_y = static_cast<int>(std::floor(std::min(a.y1, b.y1)));
  const int hi_y = static_cast<int>(std::ceil(std::max(a.y2, b.y2)));
  long in_a = 0, in_b = 0, in_both = 0;
  for (int y = lo_y; y < hi_y; ++y)
    for (int x = lo_x; x < hi_x; ++x) {
      const double cx = x + 0.5, cy = y + 0.5;
      const bool pa = cx > a.x1 && cx < a.x2 && cy > a.y1 && cy < a.y2;
      const bool pb = cx > b.x1 && cx < b.x2 && cy > b.y1 && cy < b.y2;
      in_a += pa;
      in_b += pb;
      in_both += pa && pb;
    }
  const long uni = in_a + in_b - in_both;
  return uni == 0 ? 0.0 : static_cast<double>(in_both) / static_cast<double>(uni);
}

// O(n^2) reference NMS: walk detections in descending score order (ties by
// index) and drop any box overlapping an already kept one.
inline std::vector<ardet::Detection> brute_nms(const std::vector<ardet::Detection>& dets,
                                               double thr) {
  std::vector<int> order(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (dets[static_cast<std::size_t>(a)].score != dets[static_cast<std::size_t>(b)].score)
      return dets[static_cast<std::size_t>(a)].score > dets[static_cast<std::size_t>(b)].score;
    return a < b;
  });
  std::vector<ardet::Detection> kept;
  for (int i : order) {
    bool ok = true;
    for (const auto& k : kept)
      if (ardet::iou(dets[static_cast<std::size_t>(i)].box, k.box) > thr) ok = false;
    if (ok) kept.push_back(dets[static_cast<std::size_t>(i)]);
  }
  return kept;
}

// Closed-form bilinear interpolation of a 2-D grid with half-pixel centers
// and border clamping.
inline double bilinear_at(const std::vector<double>& grid, int rows, int cols, double r, double c) {
  const double rr = std::clamp(r, 0.0, static_cast<double>(rows - 1));
  const double cc = std::clamp(c, 0.0, static_cast<double>(cols - 1));
  const int r0 = static_cast<int>(rr), c0 = static_cast<int>(cc);
  const int r1 = std::min(r0 + 1, rows - 1), c1 = std::min(c0 + 1, cols - 1);
  const double fr = rr - r0, fc = cc - c0;
  auto g = [&](int y, int x) { return grid[static_cast<std::size_t>(y) * cols + x]; };
  return (1 - fr) * ((1 - fc) * g(r0, c0) + fc * g(r0, c1)) +
         fr * ((1 - fc) * g(r1, c0) + fc * g(r1, c1));
}

}  // namespace oracles
