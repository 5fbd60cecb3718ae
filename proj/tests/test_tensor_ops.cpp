#include <doctest.h>

#include <cmath>

#include "ardet/ops.hpp"
#include "ardet/rng.hpp"
#include "oracles.hpp"

using namespace ardet;

namespace {

TensorPtr random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  auto t = Tensor::make(std::move(shape));
  for (auto& v : t->data) v = rng.uniform(lo, hi);
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) acc += a.data[i] * b.data[i];
  return acc;
}

}  // namespace

TEST_CASE("conv2d identity kernel returns the input") {
  Tape tape(false);
  auto x = Tensor::from({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  auto w = Tensor::from({1, 1, 1, 1}, {1.0});
  auto b = Tensor::make({1});
  auto y = ops::conv2d(tape, x, w, b, 1, 0);
  REQUIRE(y->shape == x->shape);
  for (std::size_t i = 0; i < x->numel(); ++i) CHECK(y->data[i] == x->data[i]);
}

TEST_CASE("conv2d stride-2 output extent") {
  Tape tape(false);
  Rng rng(3);
  auto x = random_tensor({1, 1, 4, 4}, rng);
  auto w = random_tensor({1, 1, 3, 3}, rng);
  auto b = Tensor::make({1});
  auto y = ops::conv2d(tape, x, w, b, 2, 1);
  CHECK(y->shape == std::vector<int>({1, 1, 2, 2}));
}

TEST_CASE("conv2d matches the naive loop oracle") {
  Tape tape(false);
  Rng rng(11);
  auto x = random_tensor({1, 2, 5, 5}, rng);
  auto w = random_tensor({3, 2, 3, 3}, rng);
  auto b = random_tensor({3}, rng);
  for (int stride : {1, 2}) {
    auto y = ops::conv2d(tape, x, w, b, stride, 1);
    auto ref = oracles::conv2d(*x, *w, b->data, stride, 1);
    REQUIRE(y->shape == ref->shape);
    for (std::size_t i = 0; i < y->numel(); ++i)
      CHECK(y->data[i] == doctest::Approx(ref->data[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv2d rejects a channel mismatch with a diagnostic") {
  Tape tape(false);
  auto x = Tensor::make({1, 2, 4, 4});
  auto w = Tensor::make({1, 3, 3, 3});
  auto b = Tensor::make({1});
  CHECK_THROWS_WITH_AS(ops::conv2d(tape, x, w, b, 1, 1),
                       doctest::Contains("input has 2 channels but kernel expects 3"),
                       std::invalid_argument);
}

TEST_CASE("tconv2d delta kernel produces the zero-interleaved pattern") {
  Tape tape(false);
  auto x = Tensor::from({1, 1, 2, 2}, {1, 2, 3, 4});
  auto w = Tensor::make({1, 1, 4, 4});
  w->at4(0, 0, 1, 1) = 1.0;  // single tap: out[2i][2j] = x[i][j]
  auto b = Tensor::make({1});
  auto y = ops::tconv2d(tape, x, w, b);
  auto ref = oracles::tconv2d(*x, *w, b->data, 2, 1);
  REQUIRE(y->shape == std::vector<int>({1, 1, 4, 4}));
  for (std::size_t i = 0; i < y->numel(); ++i) CHECK(y->data[i] == ref->data[i]);
  CHECK(y->at4(0, 0, 0, 0) == 1.0);
  CHECK(y->at4(0, 0, 0, 2) == 2.0);
  CHECK(y->at4(0, 0, 2, 0) == 3.0);
  CHECK(y->at4(0, 0, 2, 2) == 4.0);
  CHECK(y->at4(0, 0, 1, 1) == 0.0);
  CHECK(y->at4(0, 0, 3, 3) == 0.0);
}

TEST_CASE("tconv2d doubles the spatial extent and matches the summation oracle") {
  Tape tape(false);
  Rng rng(5);
  auto x = random_tensor({1, 3, 5, 7}, rng);
  auto w = random_tensor({3, 2, 4, 4}, rng);
  auto b = random_tensor({2}, rng);
  auto y = ops::tconv2d(tape, x, w, b);
  REQUIRE(y->shape == std::vector<int>({1, 2, 10, 14}));
  auto ref = oracles::tconv2d(*x, *w, b->data, 2, 1);
  for (std::size_t i = 0; i < y->numel(); ++i)
    CHECK(y->data[i] == doctest::Approx(ref->data[i]).epsilon(1e-12));
}

TEST_CASE("tconv2d rejects configurations that do not double the extent") {
  Tape tape(false);
  auto x = Tensor::make({1, 1, 4, 4});
  auto w = Tensor::make({1, 1, 3, 3});
  CHECK_THROWS_AS(ops::tconv2d(tape, x, w, nullptr, 2, 1), std::invalid_argument);
}

TEST_CASE("tconv2d forward is the adjoint of conv2d with swapped kernel roles") {
  Tape tape(false);
  Rng rng(17);
  auto x = random_tensor({1, 3, 4, 5}, rng);
  auto w = random_tensor({3, 2, 4, 4}, rng);  // tconv layout (ic, oc, kh, kw)
  auto y = random_tensor({1, 2, 8, 10}, rng);
  auto tx = ops::tconv2d(tape, x, w, nullptr);
  // Same memory viewed as a conv kernel maps y back to x's extent.
  auto back = oracles::conv2d(*y, *Tensor::from({3, 2, 4, 4}, w->data), {}, 2, 1);
  CHECK(dot(*tx, *y) == doctest::Approx(dot(*x, *back)).epsilon(1e-10));
}

TEST_CASE("batchnorm of a constant channel returns the shift") {
  Tape tape(false);
  auto x = Tensor::make({2, 1, 3, 3}, 7.5);
  auto scale = Tensor::from({1}, {2.0});
  auto shift = Tensor::from({1}, {0.25});
  auto rm = Tensor::make({1});
  auto rv = Tensor::make({1}, 1.0);
  auto y = ops::batchnorm(tape, x, scale, shift, rm, rv, true);
  for (double v : y->data) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("batchnorm train mode zeroes the per-channel mean") {
  Tape tape(false);
  Rng rng(23);
  auto x = random_tensor({2, 3, 4, 4}, rng);
  auto scale = Tensor::make({3}, 1.0);
  auto shift = Tensor::make({3});
  auto rm = Tensor::make({3});
  auto rv = Tensor::make({3}, 1.0);
  auto y = ops::batchnorm(tape, x, scale, shift, rm, rv, true);
  for (int c = 0; c < 3; ++c) {
    double m = 0.0;
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m += y->at4(b, c, i, j);
    CHECK(std::abs(m / 32.0) < 1e-10);
  }
}

TEST_CASE("batchnorm matches a two-pass statistics oracle") {
  Tape tape(false);
  Rng rng(29);
  auto x = random_tensor({2, 2, 3, 5}, rng);
  auto scale = Tensor::from({2}, {1.5, 0.5});
  auto shift = Tensor::from({2}, {-0.2, 0.4});
  auto rm = Tensor::make({2});
  auto rv = Tensor::make({2}, 1.0);
  auto y = ops::batchnorm(tape, x, scale, shift, rm, rv, true, 0.9, 1e-5);
  for (int c = 0; c < 2; ++c) {
    double m = 0.0;
    int n = 0;
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 5; ++j, ++n) m += x->at4(b, c, i, j);
    m /= n;
    double v = 0.0;
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 5; ++j) v += (x->at4(b, c, i, j) - m) * (x->at4(b, c, i, j) - m);
    v /= n;
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 5; ++j) {
          const double expect =
              scale->data[static_cast<std::size_t>(c)] * (x->at4(b, c, i, j) - m) / std::sqrt(v + 1e-5) +
              shift->data[static_cast<std::size_t>(c)];
          CHECK(y->at4(b, c, i, j) == doctest::Approx(expect).epsilon(1e-10));
        }
    // Running statistics after one update from (0, 1).
    CHECK(rm->data[static_cast<std::size_t>(c)] == doctest::Approx(0.1 * m).epsilon(1e-12));
    CHECK(rv->data[static_cast<std::size_t>(c)] == doctest::Approx(0.9 + 0.1 * v).epsilon(1e-12));
  }
}

TEST_CASE("batchnorm eval mode uses running statistics") {
  Tape tape(false);
  auto x = Tensor::from({1, 1, 1, 2}, {3.0, 5.0});
  auto scale = Tensor::from({1}, {2.0});
  auto shift = Tensor::from({1}, {1.0});
  auto rm = Tensor::from({1}, {4.0});
  auto rv = Tensor::from({1}, {4.0});
  auto y = ops::batchnorm(tape, x, scale, shift, rm, rv, false, 0.9, 0.0);
  CHECK(y->data[0] == doctest::Approx(1.0 + 2.0 * (3.0 - 4.0) / 2.0));
  CHECK(y->data[1] == doctest::Approx(1.0 + 2.0 * (5.0 - 4.0) / 2.0));
}

TEST_CASE("batchnorm rejects a channel count mismatch") {
  Tape tape(false);
  auto x = Tensor::make({1, 3, 2, 2});
  auto two = Tensor::make({2});
  CHECK_THROWS_AS(ops::batchnorm(tape, x, two, two, two, two, true), std::invalid_argument);
}

TEST_CASE("relu definition") {
  Tape tape(false);
  auto x = Tensor::from({1, 1, 1, 2}, {-3.0, 2.0});
  auto y = ops::relu(tape, x);
  CHECK(y->data[0] == 0.0);
  CHECK(y->data[1] == 2.0);
}

TEST_CASE("cross entropy of symmetric two-class logits is ln 2") {
  Tape tape(false);
  auto logits = Tensor::make({1, 2, 1, 1});
  for (double lab : {0.0, 1.0}) {
    auto labels = Tensor::from({1, 1, 1, 1}, {lab});
    auto loss = ops::softmax_ce(tape, logits, labels, nullptr, 2);
    CHECK(loss->data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("cross entropy with an all-ignored label map is zero with zero gradient") {
  Tape tape;
  auto logits = Tensor::param({1, 2, 2, 2});
  logits->data = {0.3, -0.1, 0.2, 0.4, 0.9, -0.5, 0.0, 0.7};
  auto labels = Tensor::make({1, 1, 2, 2}, -1.0);
  auto loss = ops::softmax_ce(tape, logits, labels, nullptr, 2);
  CHECK(loss->data[0] == 0.0);
  tape.backward(loss);
  for (double g : logits->grad) CHECK(g == 0.0);
}

TEST_CASE("smooth L1 piecewise values") {
  Tape tape(false);
  auto w = Tensor::make({1, 1, 1, 1}, 1.0);
  auto zero = Tensor::make({1, 1, 1, 1});
  auto half = Tensor::from({1, 1, 1, 1}, {0.5});
  auto two = Tensor::from({1, 1, 1, 1}, {2.0});
  CHECK(ops::smooth_l1(tape, half, zero, w)->data[0] == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(ops::smooth_l1(tape, two, zero, w)->data[0] == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("concat splits gradients back to the operands") {
  Tape tape;
  Rng rng(31);
  auto a = random_tensor({1, 2, 3, 3}, rng);
  auto b = random_tensor({1, 3, 3, 3}, rng);
  a->requires_grad = true;
  b->requires_grad = true;
  auto y = ops::concat_channels(tape, {a, b});
  REQUIRE(y->shape == std::vector<int>({1, 5, 3, 3}));
  auto loss = ops::sum(tape, y);
  tape.backward(loss);
  CHECK(a->grad.size() == a->data.size());
  CHECK(b->grad.size() == b->data.size());
  for (double g : a->grad) CHECK(g == 1.0);
  for (double g : b->grad) CHECK(g == 1.0);
}

TEST_CASE("concat rejects mismatched spatial extents") {
  Tape tape(false);
  auto a = Tensor::make({1, 2, 3, 3});
  auto b = Tensor::make({1, 2, 4, 4});
  CHECK_THROWS_AS(ops::concat_channels(tape, {a, b}), std::invalid_argument);
}
