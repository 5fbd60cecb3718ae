#include "ardet/kernels.hpp"

#include <stdexcept>

namespace ardet::kernels {

namespace {
bool g_mac_counting = false;
std::uint64_t g_mac_count = 0;
}  // namespace

void set_mac_counting(bool on) { g_mac_counting = on; }
bool mac_counting() { return g_mac_counting; }
std::uint64_t mac_count() { return g_mac_count; }
void reset_mac_count() { g_mac_count = 0; }
void add_mac_count(std::uint64_t n) { g_mac_count += n; }

int conv_out_extent(int in, int k, int stride, int pad) {
  const int v = (in + 2 * pad - k) / stride + 1;
  if (v <= 0) throw std::invalid_argument("convolution output extent would be non-positive");
  return v;
}

int tconv_out_extent(int in, int k, int up, int pad) {
  const int v = (in - 1) * up - 2 * pad + k;
  if (v <= 0) throw std::invalid_argument("transposed convolution output extent would be non-positive");
  return v;
}

void conv2d_forward_ref(const double* x, const double* w, const double* bias, double* y,
                        int B, int IC, int IH, int IW, int OC, int KH, int KW,
                        int stride, int pad, std::uint64_t* macs) {
  const int OH = conv_out_extent(IH, KH, stride, pad);
  const int OW = conv_out_extent(IW, KW, stride, pad);
  std::uint64_t taps = 0;
  for (int b = 0; b < B; ++b)
    for (int oc = 0; oc < OC; ++oc)
      for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox) {
          double acc = bias ? bias[oc] : 0.0;
          for (int ic = 0; ic < IC; ++ic)
            for (int ky = 0; ky < KH; ++ky)
              for (int kx = 0; kx < KW; ++kx) {
                const int iy = oy * stride - pad + ky;
                const int ix = ox * stride - pad + kx;
                const double v = (iy >= 0 && iy < IH && ix >= 0 && ix < IW)
                                     ? x[((static_cast<std::size_t>(b) * IC + ic) * IH + iy) * IW + ix]
                                     : 0.0;
                acc += w[((static_cast<std::size_t>(oc) * IC + ic) * KH + ky) * KW + kx] * v;
                ++taps;
              }
          y[((static_cast<std::size_t>(b) * OC + oc) * OH + oy) * OW + ox] = acc;
        }
  if (macs) *macs += taps;
}

void conv2d_backward_input_ref(const double* dy, const double* w, double* dx,
                               int B, int IC, int IH, int IW, int OC, int KH, int KW,
                               int stride, int pad) {
  const int OH = conv_out_extent(IH, KH, stride, pad);
  const int OW = conv_out_extent(IW, KW, stride, pad);
  for (int b = 0; b < B; ++b)
    for (int ic = 0; ic < IC; ++ic)
      for (int iy = 0; iy < IH; ++iy)
        for (int ix = 0; ix < IW; ++ix) {
          double acc = 0.0;
          for (int oc = 0; oc < OC; ++oc)
            for (int ky = 0; ky < KH; ++ky)
              for (int kx = 0; kx < KW; ++kx) {
                const int ty = iy + pad - ky;
                const int tx = ix + pad - kx;
                if (ty < 0 || tx < 0 || ty % stride || tx % stride) continue;
                const int oy = ty / stride, ox = tx / stride;
                if (oy >= OH || ox >= OW) continue;
                acc += dy[((static_cast<std::size_t>(b) * OC + oc) * OH + oy) * OW + ox] *
                       w[((static_cast<std::size_t>(oc) * IC + ic) * KH + ky) * KW + kx];
              }
          dx[((static_cast<std::size_t>(b) * IC + ic) * IH + iy) * IW + ix] += acc;
        }
}

void conv2d_backward_params_ref(const double* x, const double* dy, double* dw, double* dbias,
                                int B, int IC, int IH, int IW, int OC, int KH, int KW,
                                int stride, int pad) {
  const int OH = conv_out_extent(IH, KH, stride, pad);
  const int OW = conv_out_extent(IW, KW, stride, pad);
  if (dw)
    for (int oc = 0; oc < OC; ++oc)
      for (int ic = 0; ic < IC; ++ic)
        for (int ky = 0; ky < KH; ++ky)
          for (int kx = 0; kx < KW; ++kx) {
            double acc = 0.0;
            for (int b = 0; b < B; ++b)
              for (int oy = 0; oy < OH; ++oy)
                for (int ox = 0; ox < OW; ++ox) {
                  const int iy = oy * stride - pad + ky;
                  const int ix = ox * stride - pad + kx;
                  if (iy < 0 || iy >= IH || ix < 0 || ix >= IW) continue;
                  acc += x[((static_cast<std::size_t>(b) * IC + ic) * IH + iy) * IW + ix] *
                         dy[((static_cast<std::size_t>(b) * OC + oc) * OH + oy) * OW + ox];
                }
            dw[((static_cast<std::size_t>(oc) * IC + ic) * KH + ky) * KW + kx] += acc;
          }
  if (dbias)
    for (int oc = 0; oc < OC; ++oc) {
      double acc = 0.0;
      for (int b = 0; b < B; ++b)
        for (int oy = 0; oy < OH; ++oy)
          for (int ox = 0; ox < OW; ++ox)
            acc += dy[((static_cast<std::size_t>(b) * OC + oc) * OH + oy) * OW + ox];
      dbias[oc] += acc;
    }
}

void tconv2d_forward_ref(const double* x, const double* w, const double* bias, double* y,
                         int B, int IC, int IH, int IW, int OC, int KH, int KW,
                         int up, int pad, std::uint64_t* macs) {
  const int OH = tconv_out_extent(IH, KH, up, pad);
  const int OW = tconv_out_extent(IW, KW, up, pad);
  std::uint64_t taps = 0;
  for (int b = 0; b < B; ++b)
    for (int oc = 0; oc < OC; ++oc)
      for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox) {
          double acc = bias ? bias[oc] : 0.0;
          for (int ic = 0; ic < IC; ++ic)
            for (int ky = 0; ky < KH; ++ky) {
              const int ty = oy + pad - ky;
              if (ty % up) continue;
              const int iy = ty / up;
              for (int kx = 0; kx < KW; ++kx) {
                const int tx = ox + pad - kx;
                if (tx % up) continue;
                const int ix = tx / up;
                const double v = (iy >= 0 && iy < IH && ix >= 0 && ix < IW)
                                     ? x[((static_cast<std::size_t>(b) * IC + ic) * IH + iy) * IW + ix]
                                     : 0.0;
                acc += w[((static_cast<std::size_t>(ic) * OC + oc) * KH + ky) * KW + kx] * v;
                ++taps;
              }
            }
          y[((static_cast<std::size_t>(b) * OC + oc) * OH + oy) * OW + ox] = acc;
        }
  if (macs) *macs += taps;
}

void tconv2d_backward_input_ref(const double* dy, const double* w, double* dx,
                                int B, int IC, int IH, int IW, int OC, int KH, int KW,
                                int up, int pad) {
  const int OH = tconv_out_extent(IH, KH, up, pad);
  const int OW = tconv_out_extent(IW, KW, up, pad);
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
                acc += dy[((static_cast<std::size_t>(b) * OC + oc) * OH + oy) * OW + ox] *
                       w[((static_cast<std::size_t>(ic) * OC + oc) * KH + ky) * KW + kx];
              }
            }
          dx[((static_cast<std::size_t>(b) * IC + ic) * IH + iy) * IW + ix] += acc;
        }
}

void tconv2d_backward_params_ref(const double* x, const double* dy, double* dw, double* dbias,
                                 int B, int IC, int IH, int IW, int OC, int KH, int KW,
                                 int up, int pad) {
  const int OH = tconv_out_extent(IH, KH, up, pad);
  const int OW = tconv_out_extent(IW, KW, up, pad);
  if (dw)
    for (int ic = 0; ic < IC; ++ic)
      for (int oc = 0; oc < OC; ++oc)
        for (int ky = 0; ky < KH; ++ky)
          for (int kx = 0; kx < KW; ++kx) {
            double acc = 0.0;
            for (int b = 0; b < B; ++b)
              for (int iy = 0; iy < IH; ++iy) {
                const int oy = iy * up - pad + ky;
                if (oy < 0 || oy >= OH) continue;
                for (int ix = 0; ix < IW; ++ix) {
                  const int ox = ix * up - pad + kx;
                  if (ox < 0 || ox >= OW) continue;
                  acc += x[((static_cast<std::size_t>(b) * IC + ic) * IH + iy) * IW + ix] *
                         dy[((static_cast<std::size_t>(b) * OC + oc) * OH + oy) * OW + ox];
                }
              }
            dw[((static_cast<std::size_t>(ic) * OC + oc) * KH + ky) * KW + kx] += acc;
          }
  if (dbias)
    for (int oc = 0; oc < OC; ++oc) {
      double acc = 0.0;
      for (int b = 0; b < B; ++b)
        for (int oy = 0; oy < OH; ++oy)
          for (int ox = 0; ox < OW; ++ox)
            acc += dy[((static_cast<std::size_t>(b) * OC + oc) * OH + oy) * OW + ox];
      dbias[oc] += acc;
    }
}

}  // namespace ardet::kernels
