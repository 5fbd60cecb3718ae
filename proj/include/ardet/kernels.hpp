#pragma once

#include <cstdint>

namespace ardet::kernels {

// Raw convolution kernels over row-major (B, C, H, W) buffers.
//
// Every kernel comes in two flavours: the OpenMP version used by the ops
// layer, and a serial reference used by the tests and the benchmark. Both
// accumulate each output element in the same (ic, ky, kx) order, so their
// results are bit-identical; the reference versions can additionally count
// one MAC per kernel tap (out-of-range taps read zero but still count,
// which keeps the instrumented count equal to the analytic formula).
//
// Forward kernels overwrite the output. Backward kernels accumulate (+=)
// into the destination gradient buffers.

int conv_out_extent(int in, int k, int stride, int pad);
int tconv_out_extent(int in, int k, int up, int pad);

// Instrumented execution: while enabled, the ops layer routes convolutions
// through the serial reference kernels, which count one entry per
// multiply-accumulate they perform. Single-threaded test use only.
void set_mac_counting(bool on);
bool mac_counting();
std::uint64_t mac_count();
void reset_mac_count();
void add_mac_count(std::uint64_t n);

// y[b,oc,oy,ox] = bias[oc] + sum_{ic,ky,kx} x[b,ic,oy*s-p+ky,ox*s-p+kx] * w[oc,ic,ky,kx]
void conv2d_forward(const double* x, const double* w, const double* bias, double* y,
                    int B, int IC, int IH, int IW, int OC, int KH, int KW,
                    int stride, int pad);
void conv2d_forward_ref(const double* x, const double* w, const double* bias, double* y,
                        int B, int IC, int IH, int IW, int OC, int KH, int KW,
                        int stride, int pad, std::uint64_t* macs = nullptr);

void conv2d_backward_input(const double* dy, const double* w, double* dx,
                           int B, int IC, int IH, int IW, int OC, int KH, int KW,
                           int stride, int pad);
void conv2d_backward_input_ref(const double* dy, const double* w, double* dx,
                               int B, int IC, int IH, int IW, int OC, int KH, int KW,
                               int stride, int pad);

void conv2d_backward_params(const double* x, const double* dy, double* dw, double* dbias,
                            int B, int IC, int IH, int IW, int OC, int KH, int KW,
                            int stride, int pad);
void conv2d_backward_params_ref(const double* x, const double* dy, double* dw, double* dbias,
                                int B, int IC, int IH, int IW, int OC, int KH, int KW,
                                int stride, int pad);

// Fractionally strided (transposed) convolution, gather form.
// w is laid out [ic][oc][ky][kx]; output extent is (IH-1)*up - 2*pad + KH.
// y[b,oc,oy,ox] = bias[oc] + sum_{ic,ky,kx : (oy+pad-ky)%up==0, ...} x[b,ic,iy,ix] * w[ic,oc,ky,kx]
void tconv2d_forward(const double* x, const double* w, const double* bias, double* y,
                     int B, int IC, int IH, int IW, int OC, int KH, int KW,
                     int up, int pad);
void tconv2d_forward_ref(const double* x, const double* w, const double* bias, double* y,
                         int B, int IC, int IH, int IW, int OC, int KH, int KW,
                         int up, int pad, std::uint64_t* macs = nullptr);

void tconv2d_backward_input(const double* dy, const double* w, double* dx,
                            int B, int IC, int IH, int IW, int OC, int KH, int KW,
                            int up, int pad);
void tconv2d_backward_input_ref(const double* dy, const double* w, double* dx,
                                int B, int IC, int IH, int IW, int OC, int KH, int KW,
                                int up, int pad);

void tconv2d_backward_params(const double* x, const double* dy, double* dw, double* dbias,
                             int B, int IC, int IH, int IW, int OC, int KH, int KW,
                             int up, int pad);
void tconv2d_backward_params_ref(const double* x, const double* dy, double* dw, double* dbias,
                                 int B, int IC, int IH, int IW, int OC, int KH, int KW,
                                 int up, int pad);

// 2x2 max pooling, stride 2; even extents required by the caller.
// argmax holds, per output element, the flat input offset of the winner.
void maxpool2x2_forward(const double* x, double* y, int* argmax, int B, int C, int IH, int IW);
void maxpool2x2_backward(const double* dy, const int* argmax, double* dx, int B, int C, int OH, int OW);

// Bilinear 2x resize (half-pixel centers); down is the exact 2x2 mean.
void bilinear_up2_forward(const double* x, double* y, int B, int C, int IH, int IW);
void bilinear_up2_backward(const double* dy, double* dx, int B, int C, int IH, int IW);
void bilinear_down2_forward(const double* x, double* y, int B, int C, int IH, int IW);
void bilinear_down2_backward(const double* dy, double* dx, int B, int C, int IH, int IW);

}  // namespace ardet::kernels
