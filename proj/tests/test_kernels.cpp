#include <doctest.h>

#include <cstring>
#include <vector>

#include "ardet/kernels.hpp"
#include "ardet/rng.hpp"

using namespace ardet;

// The OpenMP kernels partition independent output elements across threads
// and accumulate each element in the reference order, so their results must
// be bit-identical to the serial reference regardless of thread count.

namespace {

std::vector<double> rand_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("conv2d OpenMP kernels are bit-identical to the serial reference") {
  Rng rng(7);
  for (int stride : {1, 2}) {
    const int B = 2, IC = 3, IH = 9, IW = 11, OC = 4, K = 3, pad = 1;
    const int OH = kernels::conv_out_extent(IH, K, stride, pad);
    const int OW = kernels::conv_out_extent(IW, K, stride, pad);
    const auto x = rand_vec(static_cast<std::size_t>(B) * IC * IH * IW, rng);
    const auto w = rand_vec(static_cast<std::size_t>(OC) * IC * K * K, rng);
    const auto b = rand_vec(static_cast<std::size_t>(OC), rng);
    const auto dy = rand_vec(static_cast<std::size_t>(B) * OC * OH * OW, rng);

    std::vector<double> y_ref(dy.size()), y_omp(dy.size());
    kernels::conv2d_forward_ref(x.data(), w.data(), b.data(), y_ref.data(), B, IC, IH, IW, OC, K,
                                K, stride, pad);
    kernels::conv2d_forward(x.data(), w.data(), b.data(), y_omp.data(), B, IC, IH, IW, OC, K, K,
                            stride, pad);
    CHECK(bits_equal(y_ref, y_omp));

    std::vector<double> dx_ref(x.size(), 0.125), dx_omp(x.size(), 0.125);
    kernels::conv2d_backward_input_ref(dy.data(), w.data(), dx_ref.data(), B, IC, IH, IW, OC, K,
                                       K, stride, pad);
    kernels::conv2d_backward_input(dy.data(), w.data(), dx_omp.data(), B, IC, IH, IW, OC, K, K,
                                   stride, pad);
    CHECK(bits_equal(dx_ref, dx_omp));

    std::vector<double> dw_ref(w.size(), 0.25), dw_omp(w.size(), 0.25);
    std::vector<double> db_ref(b.size(), -0.5), db_omp(b.size(), -0.5);
    kernels::conv2d_backward_params_ref(x.data(), dy.data(), dw_ref.data(), db_ref.data(), B, IC,
                                        IH, IW, OC, K, K, stride, pad);
    kernels::conv2d_backward_params(x.data(), dy.data(), dw_omp.data(), db_omp.data(), B, IC, IH,
                                    IW, OC, K, K, stride, pad);
    CHECK(bits_equal(dw_ref, dw_omp));
    CHECK(bits_equal(db_ref, db_omp));
  }
}

TEST_CASE("tconv2d OpenMP kernels are bit-identical to the serial reference") {
  Rng rng(13);
  const int B = 2, IC = 3, IH = 5, IW = 6, OC = 2, K = 4, up = 2, pad = 1;
  const int OH = kernels::tconv_out_extent(IH, K, up, pad);
  const int OW = kernels::tconv_out_extent(IW, K, up, pad);
  const auto x = rand_vec(static_cast<std::size_t>(B) * IC * IH * IW, rng);
  const auto w = rand_vec(static_cast<std::size_t>(IC) * OC * K * K, rng);
  const auto b = rand_vec(static_cast<std::size_t>(OC), rng);
  const auto dy = rand_vec(static_cast<std::size_t>(B) * OC * OH * OW, rng);

  std::vector<double> y_ref(dy.size()), y_omp(dy.size());
  kernels::tconv2d_forward_ref(x.data(), w.data(), b.data(), y_ref.data(), B, IC, IH, IW, OC, K,
                               K, up, pad);
  kernels::tconv2d_forward(x.data(), w.data(), b.data(), y_omp.data(), B, IC, IH, IW, OC, K, K,
                           up, pad);
  CHECK(bits_equal(y_ref, y_omp));

  std::vector<double> dx_ref(x.size(), 0.0), dx_omp(x.size(), 0.0);
  kernels::tconv2d_backward_input_ref(dy.data(), w.data(), dx_ref.data(), B, IC, IH, IW, OC, K, K,
                                      up, pad);
  kernels::tconv2d_backward_input(dy.data(), w.data(), dx_omp.data(), B, IC, IH, IW, OC, K, K, up,
                                  pad);
  CHECK(bits_equal(dx_ref, dx_omp));

  std::vector<double> dw_ref(w.size(), 0.0), dw_omp(w.size(), 0.0);
  std::vector<double> db_ref(b.size(), 0.0), db_omp(b.size(), 0.0);
  kernels::tconv2d_backward_params_ref(x.data(), dy.data(), dw_ref.data(), db_ref.data(), B, IC,
                                       IH, IW, OC, K, K, up, pad);
  kernels::tconv2d_backward_params(x.data(), dy.data(), dw_omp.data(), db_omp.data(), B, IC, IH,
                                   IW, OC, K, K, up, pad);
  CHECK(bits_equal(dw_ref, dw_omp));
  CHECK(bits_equal(db_ref, db_omp));
}

TEST_CASE("instrumented tap counting matches the analytic convolution formula") {
  Rng rng(17);
  const int B = 1, IC = 3, IH = 8, IW = 8, OC = 5, K = 3;
  const auto x = rand_vec(static_cast<std::size_t>(B) * IC * IH * IW, rng);
  const auto w = rand_vec(static_cast<std::size_t>(OC) * IC * K * K, rng);
  for (int stride : {1, 2}) {
    const int OH = kernels::conv_out_extent(IH, K, stride, 1);
    const int OW = kernels::conv_out_extent(IW, K, stride, 1);
    std::vector<double> y(static_cast<std::size_t>(B) * OC * OH * OW);
    std::uint64_t macs = 0;
    kernels::conv2d_forward_ref(x.data(), w.data(), nullptr, y.data(), B, IC, IH, IW, OC, K, K,
                                stride, 1, &macs);
    CHECK(macs == static_cast<std::uint64_t>(OH) * OW * OC * IC * K * K);
  }
  // Fractionally strided: (K/up)^2 taps per output element and channel.
  const int OH = kernels::tconv_out_extent(IH, 4, 2, 1);
  std::vector<double> wt(static_cast<std::size_t>(IC) * OC * 16);
  std::vector<double> y(static_cast<std::size_t>(B) * OC * OH * OH);
  std::uint64_t macs = 0;
  kernels::tconv2d_forward_ref(x.data(), wt.data(), nullptr, y.data(), B, IC, IH, IW, OC, 4, 4, 2,
                               1, &macs);
  CHECK(macs == static_cast<std::uint64_t>(OH) * OH * OC * IC * 4);
}

TEST_CASE("bilinear upsample preserves constants and reproduces a hand ramp") {
  const int B = 1, C = 1, IH = 2, IW = 2;
  std::vector<double> constant(4, 3.25), up(16);
  kernels::bilinear_up2_forward(constant.data(), up.data(), B, C, IH, IW);
  for (double v : up) CHECK(v == doctest::Approx(3.25).epsilon(1e-15));

  // Ramp 0,1 / 2,3: interior samples interpolate with weights 0.75/0.25.
  std::vector<double> ramp = {0, 1, 2, 3};
  kernels::bilinear_up2_forward(ramp.data(), up.data(), B, C, IH, IW);
  CHECK(up[0] == doctest::Approx(0.0));
  CHECK(up[1] == doctest::Approx(0.25 * 1.0 + 0.75 * 0.0));
  CHECK(up[2] == doctest::Approx(0.75 * 1.0 + 0.25 * 0.0));
  CHECK(up[3] == doctest::Approx(1.0));
  CHECK(up[4] == doctest::Approx(0.25 * 2.0));
  CHECK(up[15] == doctest::Approx(3.0));
}

TEST_CASE("bilinear downsample by two is the 2x2 mean") {
  std::vector<double> x = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
  std::vector<double> y(4);
  kernels::bilinear_down2_forward(x.data(), y.data(), 1, 1, 4, 4);
  CHECK(y[0] == doctest::Approx((1 + 2 + 5 + 6) / 4.0));
  CHECK(y[3] == doctest::Approx((11 + 12 + 15 + 16) / 4.0));
}
