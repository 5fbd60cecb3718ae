#include "ardet/kernels.hpp"

#include <algorithm>
#include <cstddef>
#include <vector>

// OpenMP variants. Work is split so that every output element is owned by
// exactly one thread and accumulated in the same scalar order as the serial
// reference kernels, which keeps results bit-identical to the reference (and
// independent of the thread count).

namespace ardet::kernels {

namespace {

inline std::size_t idx4(int a, int b, int c, int d, int B, int C, int D) {
  return ((static_cast<std::size_t>(a) * B + b) * C + c) * D + d;
}

// Smallest o >= 0 with o*stride >= need.
inline int range_lo(int need, int stride) {
  return need <= 0 ? 0 : (need + stride - 1) / stride;
}

// One past the largest o with o*stride <= limit, capped.
inline int range_hi(int limit, int stride, int cap) {
  return limit < 0 ? 0 : std::min(cap, limit / stride + 1);
}

}  // namespace

void conv2d_forward(const double* x, const double* w, const double* bias, double* y,
                    int B, int IC, int IH, int IW, int OC, int KH, int KW,
                    int stride, int pad) {
  const int OH = conv_out_extent(IH, KH, stride, pad);
  const int OW = conv_out_extent(IW, KW, stride, pad);
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b)
    for (int oc = 0; oc < OC; ++oc) {
      double* yo = y + idx4(b, oc, 0, 0, OC, OH, OW);
      const double bv = bias ? bias[oc] : 0.0;
      std::fill(yo, yo + static_cast<std::size_t>(OH) * OW, bv);
      for (int ic = 0; ic < IC; ++ic) {
        const double* xi = x + idx4(b, ic, 0, 0, IC, IH, IW);
        for (int ky = 0; ky < KH; ++ky) {
          const int oy_lo = range_lo(pad - ky, stride);
          const int oy_hi = range_hi(IH - 1 + pad - ky, stride, OH);
          for (int kx = 0; kx < KW; ++kx) {
            const double wv = w[((static_cast<std::size_t>(oc) * IC + ic) * KH + ky) * KW + kx];
            const int ox_lo = range_lo(pad - kx, stride);
            const int ox_hi = range_hi(IW - 1 + pad - kx, stride, OW);
            for (int oy = oy_lo; oy < oy_hi; ++oy) {
              const double* xrow = xi + static_cast<std::size_t>(oy * stride - pad + ky) * IW;
              double* yrow = yo + static_cast<std::size_t>(oy) * OW;
              const int off = kx - pad;
              if (stride == 1) {
                for (int ox = ox_lo; ox < ox_hi; ++ox) yrow[ox] += wv * xrow[ox + off];
              } else {
                for (int ox = ox_lo; ox < ox_hi; ++ox) yrow[ox] += wv * xrow[ox * stride + off];
              }
            }
          }
        }
      }
    }
}

void conv2d_backward_input(const double* dy, const double* w, double* dx,
                           int B, int IC, int IH, int IW, int OC, int KH, int KW,
                           int stride, int pad) {
  const int OH = conv_out_extent(IH, KH, stride, pad);
  const int OW = conv_out_extent(IW, KW, stride, pad);
  if (stride == 1) {
    // Row accumulation mirroring the forward kernel. Sums build up in a
    // zeroed plane and land on dx with a single addition per element, the
    // same order the reference uses.
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < B; ++b)
      for (int ic = 0; ic < IC; ++ic) {
        std::vector<double> plane(static_cast<std::size_t>(IH) * IW, 0.0);
        for (int oc = 0; oc < OC; ++oc) {
          const double* dyo = dy + idx4(b, oc, 0, 0, OC, OH, OW);
          for (int ky = 0; ky < KH; ++ky)
            for (int kx = 0; kx < KW; ++kx) {
              const double wv = w[((static_cast<std::size_t>(oc) * IC + ic) * KH + ky) * KW + kx];
              const int iy_lo = std::max(0, ky - pad);
              const int iy_hi = std::min(IH, OH + ky - pad);
              const int ix_lo = std::max(0, kx - pad);
              const int ix_hi = std::min(IW, OW + kx - pad);
              for (int iy = iy_lo; iy < iy_hi; ++iy) {
                const double* dyrow = dyo + static_cast<std::size_t>(iy + pad - ky) * OW;
                double* arow = plane.data() + static_cast<std::size_t>(iy) * IW;
                const int off = pad - kx;
                for (int ix = ix_lo; ix < ix_hi; ++ix) arow[ix] += wv * dyrow[ix + off];
              }
            }
        }
        double* dxi = dx + idx4(b, ic, 0, 0, IC, IH, IW);
        for (std::size_t i = 0; i < plane.size(); ++i) dxi[i] += plane[i];
      }
    return;
  }
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b)
    for (int ic = 0; ic < IC; ++ic)
      for (int iy = 0; iy < IH; ++iy)
        for (int ix = 0; ix < IW; ++ix) {
          double acc = 0.0;
          for (int oc = 0; oc < OC; ++oc)
            for (int ky = 0; ky < KH; ++ky) {
              const int ty = iy + pad - ky;
              if (ty < 0 || ty % stride) continue;
              const int oy = ty / stride;
              if (oy >= OH) continue;
              for (int kx = 0; kx < KW; ++kx) {
                const int tx = ix + pad - kx;
                if (tx < 0 || tx % stride) continue;
                const int ox = tx / stride;
                if (ox >= OW) continue;
                acc += dy[idx4(b, oc, oy, ox, OC, OH, OW)] *
                       w[((static_cast<std::size_t>(oc) * IC + ic) * KH + ky) * KW + kx];
              }
            }
          dx[idx4(b, ic, iy, ix, IC, IH, IW)] += acc;
        }
}

void conv2d_backward_params(const double* x, const double* dy, double* dw, double* dbias,
                            int B, int IC, int IH, int IW, int OC, int KH, int KW,
                            int stride, int pad) {
  const int OH = conv_out_extent(IH, KH, stride, pad);
  const int OW = conv_out_extent(IW, KW, stride, pad);
  if (dw) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int oc = 0; oc < OC; ++oc)
      for (int ic = 0; ic < IC; ++ic)
        for (int ky = 0; ky < KH; ++ky)
          for (int kx = 0; kx < KW; ++kx) {
            double acc = 0.0;
            for (int b = 0; b < B; ++b) {
              const double* xi = x + idx4(b, ic, 0, 0, IC, IH, IW);
              const double* dyo = dy + idx4(b, oc, 0, 0, OC, OH, OW);
              const int oy_lo = range_lo(pad - ky, stride);
              const int oy_hi = range_hi(IH - 1 + pad - ky, stride, OH);
              const int ox_lo = range_lo(pad - kx, stride);
              const int ox_hi = range_hi(IW - 1 + pad - kx, stride, OW);
              for (int oy = oy_lo; oy < oy_hi; ++oy) {
                const double* xrow = xi + static_cast<std::size_t>(oy * stride - pad + ky) * IW;
                const double* dyrow = dyo + static_cast<std::size_t>(oy) * OW;
                const int off = kx - pad;
                for (int ox = ox_lo; ox < ox_hi; ++ox)
                  acc += xrow[ox * stride + off] * dyrow[ox];
              }
            }
            dw[((static_cast<std::size_t>(oc) * IC + ic) * KH + ky) * KW + kx] += acc;
          }
  }
  if (dbias) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < OC; ++oc) {
      double acc = 0.0;
      for (int b = 0; b < B; ++b) {
        const double* dyo = dy + idx4(b, oc, 0, 0, OC, OH, OW);
        for (std::size_t i = 0; i < static_cast<std::size_t>(OH) * OW; ++i) acc += dyo[i];
      }
      dbias[oc] += acc;
    }
  }
}

void tconv2d_forward(const double* x, const double* w, const double* bias, double* y,
                     int B, int IC, int IH, int IW, int OC, int KH, int KW,
                     int up, int pad) {
  const int OH = tconv_out_extent(IH, KH, up, pad);
  const int OW = tconv_out_extent(IW, KW, up, pad);
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b)
    for (int oc = 0; oc < OC; ++oc)
      for (int oy = 0; oy < OH; ++oy) {
        // Taps passing the phase test for this output row/column.
        int kys[8], iys[8], nky = 0;
        for (int ky = 0; ky < KH; ++ky) {
          const int ty = oy + pad - ky;
          if (ty % up) continue;
          kys[nky] = ky;
          iys[nky] = ty / up;
          ++nky;
        }
        for (int ox = 0; ox < OW; ++ox) {
          int kxs[8], ixs[8], nkx = 0;
          for (int kx = 0; kx < KW; ++kx) {
            const int tx = ox + pad - kx;
            if (tx % up) continue;
            kxs[nkx] = kx;
            ixs[nkx] = tx / up;
            ++nkx;
          }
          double acc = bias ? bias[oc] : 0.0;
          for (int ic = 0; ic < IC; ++ic)
            for (int a = 0; a < nky; ++a) {
              const int iy = iys[a];
              for (int c = 0; c < nkx; ++c) {
                const int ix = ixs[c];
                const double v = (iy >= 0 && iy < IH && ix >= 0 && ix < IW)
                                     ? x[idx4(b, ic, iy, ix, IC, IH, IW)]
                                     : 0.0;
                acc += w[((static_cast<std::size_t>(ic) * OC + oc) * KH + kys[a]) * KW + kxs[c]] * v;
              }
            }
          y[idx4(b, oc, oy, ox, OC, OH, OW)] = acc;
        }
      }
}

void tconv2d_backward_input(const double* dy, const double* w, double* dx,
                            int B, int IC, int IH, int IW, int OC, int KH, int KW,
                            int up, int pad) {
  const int OH = tconv_out_extent(IH, KH, up, pad);
  const int OW = tconv_out_extent(IW, KW, up, pad);
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b)
    for (int ic = 0; ic < IC; ++ic)
      for (int iy = 0; iy < IH; ++iy)
        for (int ix = 0; ix < IW; ++ix) {
          double acc = 0.0;
          for (int oc = 0; oc < OC; ++oc)
            for (int ky = 0; ky < KH; ++ky) {
              const int oy = iy * up - pad + ky;
              if (oy < 0 || oy >= OH) continue;
              for (int kx = 0; kx < KW; ++kx) {
                const int ox = ix * up - pad + kx;
                if (ox < 0 || ox >= OW) continue;
                acc += dy[idx4(b, oc, oy, ox, OC, OH, OW)] *
                       w[((static_cast<std::size_t>(ic) * OC + oc) * KH + ky) * KW + kx];
              }
            }
          dx[idx4(b, ic, iy, ix, IC, IH, IW)] += acc;
        }
}

void tconv2d_backward_params(const double* x, const double* dy, double* dw, double* dbias,
                             int B, int IC, int IH, int IW, int OC, int KH, int KW,
                             int up, int pad) {
  const int OH = tconv_out_extent(IH, KH, up, pad);
  const int OW = tconv_out_extent(IW, KW, up, pad);
  if (dw) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int ic = 0; ic < IC; ++ic)
      for (int oc = 0; oc < OC; ++oc)
        for (int ky = 0; ky < KH; ++ky)
          for (int kx = 0; kx < KW; ++kx) {
            double acc = 0.0;
            for (int b = 0; b < B; ++b)
              for (int iy = 0; iy < IH; ++iy) {
                const int oy = iy * up - pad + ky;
                if (oy < 0 || oy >= OH) continue;
                const double* xrow = x + idx4(b, ic, iy, 0, IC, IH, IW);
                const double* dyrow = dy + idx4(b, oc, oy, 0, OC, OH, OW);
                for (int ix = 0; ix < IW; ++ix) {
                  const int ox = ix * up - pad + kx;
                  if (ox < 0 || ox >= OW) continue;
                  acc += xrow[ix] * dyrow[ox];
                }
              }
            dw[((static_cast<std::size_t>(ic) * OC + oc) * KH + ky) * KW + kx] += acc;
          }
  }
  if (dbias) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < OC; ++oc) {
      double acc = 0.0;
      for (int b = 0; b < B; ++b) {
        const double* dyo = dy + idx4(b, oc, 0, 0, OC, OH, OW);
        for (std::size_t i = 0; i < static_cast<std::size_t>(OH) * OW; ++i) acc += dyo[i];
      }
      dbias[oc] += acc;
    }
  }
}

void maxpool2x2_forward(const double* x, double* y, int* argmax, int B, int C, int IH, int IW) {
  const int OH = IH / 2, OW = IW / 2;
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox) {
          std::size_t best = idx4(b, c, oy * 2, ox * 2, C, IH, IW);
          double bv = x[best];
          for (int dy_ = 0; dy_ < 2; ++dy_)
            for (int dx_ = 0; dx_ < 2; ++dx_) {
              const std::size_t i = idx4(b, c, oy * 2 + dy_, ox * 2 + dx_, C, IH, IW);
              if (x[i] > bv) {
                bv = x[i];
                best = i;
              }
            }
          const std::size_t o = idx4(b, c, oy, ox, C, OH, OW);
          y[o] = bv;
          argmax[o] = static_cast<int>(best);
        }
}

void maxpool2x2_backward(const double* dy, const int* argmax, double* dx, int B, int C, int OH, int OW) {
  // Pool windows are disjoint, so scattering per output element is race free.
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox) {
          const std::size_t o = idx4(b, c, oy, ox, C, OH, OW);
          dx[argmax[o]] += dy[o];
        }
}

namespace {

// Bilinear taps at half-pixel centers for a 2x upsample: output o samples the
// input at o/2 - 0.25, clamped at the borders.
inline void up2_taps(int o, int n_in, int& i0, double& w0, int& i1, double& w1) {
  const double s = 0.5 * o - 0.25;
  int lo = static_cast<int>(s >= 0 ? s : -1.0);
  const double f = s - lo;
  i0 = std::clamp(lo, 0, n_in - 1);
  i1 = std::clamp(lo + 1, 0, n_in - 1);
  w0 = 1.0 - f;
  w1 = f;
}

}  // namespace

void bilinear_up2_forward(const double* x, double* y, int B, int C, int IH, int IW) {
  const int OH = IH * 2, OW = IW * 2;
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const double* xi = x + idx4(b, c, 0, 0, C, IH, IW);
      double* yo = y + idx4(b, c, 0, 0, C, OH, OW);
      for (int oy = 0; oy < OH; ++oy) {
        int y0, y1;
        double wy0, wy1;
        up2_taps(oy, IH, y0, wy0, y1, wy1);
        for (int ox = 0; ox < OW; ++ox) {
          int x0, x1;
          double wx0, wx1;
          up2_taps(ox, IW, x0, wx0, x1, wx1);
          yo[static_cast<std::size_t>(oy) * OW + ox] =
              wy0 * (wx0 * xi[static_cast<std::size_t>(y0) * IW + x0] +
                     wx1 * xi[static_cast<std::size_t>(y0) * IW + x1]) +
              wy1 * (wx0 * xi[static_cast<std::size_t>(y1) * IW + x0] +
                     wx1 * xi[static_cast<std::size_t>(y1) * IW + x1]);
        }
      }
    }
}

void bilinear_up2_backward(const double* dy, double* dx, int B, int C, int IH, int IW) {
  const int OH = IH * 2, OW = IW * 2;
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const double* dyo = dy + idx4(b, c, 0, 0, C, OH, OW);
      double* dxi = dx + idx4(b, c, 0, 0, C, IH, IW);
      for (int iy = 0; iy < IH; ++iy)
        for (int ix = 0; ix < IW; ++ix) {
          double acc = 0.0;
          const int oy_lo = std::max(0, 2 * iy - 2), oy_hi = std::min(OH - 1, 2 * iy + 3);
          const int ox_lo = std::max(0, 2 * ix - 2), ox_hi = std::min(OW - 1, 2 * ix + 3);
          for (int oy = oy_lo; oy <= oy_hi; ++oy) {
            int y0, y1;
            double wy0, wy1;
            up2_taps(oy, IH, y0, wy0, y1, wy1);
            const double wy = (y0 == iy ? wy0 : 0.0) + (y1 == iy ? wy1 : 0.0);
            if (wy == 0.0) continue;
            for (int ox = ox_lo; ox <= ox_hi; ++ox) {
              int x0, x1;
              double wx0, wx1;
              up2_taps(ox, IW, x0, wx0, x1, wx1);
              const double wx = (x0 == ix ? wx0 : 0.0) + (x1 == ix ? wx1 : 0.0);
              if (wx == 0.0) continue;
              acc += wy * wx * dyo[static_cast<std::size_t>(oy) * OW + ox];
            }
          }
          dxi[static_cast<std::size_t>(iy) * IW + ix] += acc;
        }
    }
}

void bilinear_down2_forward(const double* x, double* y, int B, int C, int IH, int IW) {
  const int OH = IH / 2, OW = IW / 2;
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const double* xi = x + idx4(b, c, 0, 0, C, IH, IW);
      double* yo = y + idx4(b, c, 0, 0, C, OH, OW);
      for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox) {
          const double* r0 = xi + static_cast<std::size_t>(2 * oy) * IW + 2 * ox;
          const double* r1 = r0 + IW;
          yo[static_cast<std::size_t>(oy) * OW + ox] = 0.25 * (r0[0] + r0[1] + r1[0] + r1[1]);
        }
    }
}

void bilinear_down2_backward(const double* dy, double* dx, int B, int C, int IH, int IW) {
  const int OH = IH / 2, OW = IW / 2;
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const double* dyo = dy + idx4(b, c, 0, 0, C, OH, OW);
      double* dxi = dx + idx4(b, c, 0, 0, C, IH, IW);
      for (int iy = 0; iy < IH; ++iy)
        for (int ix = 0; ix < IW; ++ix)
          dxi[static_cast<std::size_t>(iy) * IW + ix] +=
              0.25 * dyo[static_cast<std::size_t>(iy / 2) * OW + ix / 2];
    }
}

}  // namespace ardet::kernels
