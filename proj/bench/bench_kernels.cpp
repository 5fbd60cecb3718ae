// Compares the OpenMP kernels against the serial reference at the shapes the
// network actually runs, for forward and backward passes. Build and run:
//   ./build/bench/bench_kernels [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include <omp.h>

#include "ardet/kernels.hpp"
#include "ardet/rng.hpp"

using namespace ardet;

namespace {

double time_of(int repeats, const std::function<void()>& fn) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < repeats; ++r) fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / repeats;
}

struct Case {
  const char* name;
  int ic, ih, iw, oc, k, stride, pad;
};

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 5;
  Rng rng(7);

  const Case cases[] = {
      {"backbone_l1", 8, 160, 160, 8, 3, 1, 1},
      {"backbone_l3", 16, 40, 40, 32, 3, 1, 1},
      {"lateral_l5", 128, 10, 10, 64, 3, 1, 1},
      {"encode_e4", 16, 40, 40, 32, 3, 2, 1},
  };

  std::printf("%-14s %-9s %10s %10s %8s\n", "case", "pass", "serial ms", "omp ms", "speedup");
  for (const Case& c : cases) {
    const int oh = kernels::conv_out_extent(c.ih, c.k, c.stride, c.pad);
    const int ow = kernels::conv_out_extent(c.iw, c.k, c.stride, c.pad);
    std::vector<double> x(static_cast<std::size_t>(c.ic) * c.ih * c.iw);
    std::vector<double> w(static_cast<std::size_t>(c.oc) * c.ic * c.k * c.k);
    std::vector<double> bias(static_cast<std::size_t>(c.oc));
    std::vector<double> y(static_cast<std::size_t>(c.oc) * oh * ow);
    std::vector<double> dy(y.size(), 0.5), dx(x.size()), dw(w.size()), db(bias.size());
    for (auto& v : x) v = rng.uniform(-1, 1);
    for (auto& v : w) v = rng.uniform(-1, 1);

    const double fs = time_of(repeats, [&] {
      kernels::conv2d_forward_ref(x.data(), w.data(), bias.data(), y.data(), 1, c.ic, c.ih, c.iw,
                                  c.oc, c.k, c.k, c.stride, c.pad);
    });
    const double fo = time_of(repeats, [&] {
      kernels::conv2d_forward(x.data(), w.data(), bias.data(), y.data(), 1, c.ic, c.ih, c.iw,
                              c.oc, c.k, c.k, c.stride, c.pad);
    });
    std::printf("%-14s %-9s %10.3f %10.3f %7.2fx\n", c.name, "forward", fs * 1e3, fo * 1e3, fs / fo);

    const double bs = time_of(repeats, [&] {
      kernels::conv2d_backward_input_ref(dy.data(), w.data(), dx.data(), 1, c.ic, c.ih, c.iw,
                                         c.oc, c.k, c.k, c.stride, c.pad);
      kernels::conv2d_backward_params_ref(x.data(), dy.data(), dw.data(), db.data(), 1, c.ic,
                                          c.ih, c.iw, c.oc, c.k, c.k, c.stride, c.pad);
    });
    const double bo = time_of(repeats, [&] {
      kernels::conv2d_backward_input(dy.data(), w.data(), dx.data(), 1, c.ic, c.ih, c.iw, c.oc,
                                     c.k, c.k, c.stride, c.pad);
      kernels::conv2d_backward_params(x.data(), dy.data(), dw.data(), db.data(), 1, c.ic, c.ih,
                                      c.iw, c.oc, c.k, c.k, c.stride, c.pad);
    });
    std::printf("%-14s %-9s %10.3f %10.3f %7.2fx\n", c.name, "backward", bs * 1e3, bo * 1e3, bs / bo);
  }

  // Fractionally strided upsampling at the de-encoder shapes.
  {
    const int ic = 64, oc = 32, ih = 10, iw = 10, k = 4, up = 2, pad = 1;
    const int oh = kernels::tconv_out_extent(ih, k, up, pad);
    std::vector<double> x(static_cast<std::size_t>(ic) * ih * iw, 0.3);
    std::vector<double> w(static_cast<std::size_t>(ic) * oc * k * k, 0.1);
    std::vector<double> bias(static_cast<std::size_t>(oc));
    std::vector<double> y(static_cast<std::size_t>(oc) * oh * oh);
    const double fs = time_of(repeats, [&] {
      kernels::tconv2d_forward_ref(x.data(), w.data(), bias.data(), y.data(), 1, ic, ih, iw, oc,
                                   k, k, up, pad);
    });
    const double fo = time_of(repeats, [&] {
      kernels::tconv2d_forward(x.data(), w.data(), bias.data(), y.data(), 1, ic, ih, iw, oc, k, k,
                               up, pad);
    });
    std::printf("%-14s %-9s %10.3f %10.3f %7.2fx\n", "decode_d4", "forward", fs * 1e3, fo * 1e3,
                fs / fo);
  }

  std::printf("threads: %d\n", omp_get_max_threads());
  return 0;
}
