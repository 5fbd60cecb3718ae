#include "ardet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "ardet/kernels.hpp"

namespace ardet::ops {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void require4d(const TensorPtr& t, const char* what) {
  require(t && t->ndim() == 4, std::string(what) + " must be a 4-D tensor");
}

TensorPtr new_output(Tape& tape, std::vector<int> shape) {
  auto y = Tensor::make(std::move(shape));
  tape.note_alloc(y->numel());
  return y;
}

bool wants_grad(Tape& tape, std::initializer_list<TensorPtr> ins) {
  if (!tape.recording()) return false;
  for (const auto& t : ins)
    if (t && t->requires_grad) return true;
  return false;
}

void mark_output(const TensorPtr& y, std::initializer_list<TensorPtr> ins) {
  y->requires_grad = true;
  y->ensure_grad();
  for (const auto& t : ins)
    if (t && t->requires_grad) t->ensure_grad();
}

}  // namespace

TensorPtr conv2d(Tape& tape, const TensorPtr& x, const TensorPtr& w, const TensorPtr& b,
                 int stride, int pad) {
  require4d(x, "conv2d input");
  require4d(w, "conv2d kernel");
  require(stride == 1 || stride == 2, "conv2d stride must be 1 or 2");
  require(pad >= 0, "conv2d padding must be non-negative");
  require(w->dim(2) >= 1 && w->dim(3) >= 1, "conv2d kernel spatial size must be >= 1");
  const int B = x->dim(0), IC = x->dim(1), IH = x->dim(2), IW = x->dim(3);
  const int OC = w->dim(0), KH = w->dim(2), KW = w->dim(3);
  require(w->dim(1) == IC, "conv2d: input has " + std::to_string(IC) +
                               " channels but kernel expects " + std::to_string(w->dim(1)));
  if (b) require(b->numel() == static_cast<std::size_t>(OC), "conv2d bias length must equal output channels");
  const int OH = kernels::conv_out_extent(IH, KH, stride, pad);
  const int OW = kernels::conv_out_extent(IW, KW, stride, pad);

  auto y = new_output(tape, {B, OC, OH, OW});
  if (kernels::mac_counting()) {
    std::uint64_t macs = 0;
    kernels::conv2d_forward_ref(x->data.data(), w->data.data(), b ? b->data.data() : nullptr,
                                y->data.data(), B, IC, IH, IW, OC, KH, KW, stride, pad, &macs);
    kernels::add_mac_count(macs);
  } else {
    kernels::conv2d_forward(x->data.data(), w->data.data(), b ? b->data.data() : nullptr,
                            y->data.data(), B, IC, IH, IW, OC, KH, KW, stride, pad);
  }

  if (wants_grad(tape, {x, w, b})) {
    mark_output(y, {x, w, b});
    tape.record([=] {
      if (x->requires_grad)
        kernels::conv2d_backward_input(y->grad.data(), w->data.data(), x->grad.data(),
                                       B, IC, IH, IW, OC, KH, KW, stride, pad);
      if (w->requires_grad || (b && b->requires_grad))
        kernels::conv2d_backward_params(x->data.data(), y->grad.data(),
                                        w->requires_grad ? w->grad.data() : nullptr,
                                        (b && b->requires_grad) ? b->grad.data() : nullptr,
                                        B, IC, IH, IW, OC, KH, KW, stride, pad);
    });
  }
  return y;
}

TensorPtr tconv2d(Tape& tape, const TensorPtr& x, const TensorPtr& w, const TensorPtr& b,
                  int up, int pad) {
  require4d(x, "tconv2d input");
  require4d(w, "tconv2d kernel");
  require(up == 2, "tconv2d up factor must be 2");
  const int B = x->dim(0), IC = x->dim(1), IH = x->dim(2), IW = x->dim(3);
  const int OC = w->dim(1), KH = w->dim(2), KW = w->dim(3);
  require(w->dim(0) == IC, "tconv2d: input has " + std::to_string(IC) +
                               " channels but kernel expects " + std::to_string(w->dim(0)));
  if (b) require(b->numel() == static_cast<std::size_t>(OC), "tconv2d bias length must equal output channels");
  const int OH = kernels::tconv_out_extent(IH, KH, up, pad);
  const int OW = kernels::tconv_out_extent(IW, KW, up, pad);
  require(OH == 2 * IH && OW == 2 * IW,
          "tconv2d must double the spatial extent; kernel " + std::to_string(KH) + "x" +
              std::to_string(KW) + " with pad " + std::to_string(pad) + " yields " +
              std::to_string(OH) + "x" + std::to_string(OW) + " from " + std::to_string(IH) + "x" +
              std::to_string(IW));

  auto y = new_output(tape, {B, OC, OH, OW});
  if (kernels::mac_counting()) {
    std::uint64_t macs = 0;
    kernels::tconv2d_forward_ref(x->data.data(), w->data.data(), b ? b->data.data() : nullptr,
                                 y->data.data(), B, IC, IH, IW, OC, KH, KW, up, pad, &macs);
    kernels::add_mac_count(macs);
  } else {
    kernels::tconv2d_forward(x->data.data(), w->data.data(), b ? b->data.data() : nullptr,
                             y->data.data(), B, IC, IH, IW, OC, KH, KW, up, pad);
  }

  if (wants_grad(tape, {x, w, b})) {
    mark_output(y, {x, w, b});
    tape.record([=] {
      if (x->requires_grad)
        kernels::tconv2d_backward_input(y->grad.data(), w->data.data(), x->grad.data(),
                                        B, IC, IH, IW, OC, KH, KW, up, pad);
      if (w->requires_grad || (b && b->requires_grad))
        kernels::tconv2d_backward_params(x->data.data(), y->grad.data(),
                                         w->requires_grad ? w->grad.data() : nullptr,
                                         (b && b->requires_grad) ? b->grad.data() : nullptr,
                                         B, IC, IH, IW, OC, KH, KW, up, pad);
    });
  }
  return y;
}

TensorPtr batchnorm(Tape& tape, const TensorPtr& x, const TensorPtr& scale, const TensorPtr& shift,
                    const TensorPtr& running_mean, const TensorPtr& running_var, bool train,
                    double momentum, double eps) {
  require4d(x, "batchnorm input");
  const int B = x->dim(0), C = x->dim(1), H = x->dim(2), W = x->dim(3);
  for (const auto& [t, what] : {std::pair{scale, "scale"}, {shift, "shift"},
                                {running_mean, "running mean"}, {running_var, "running var"}})
    require(t && t->numel() == static_cast<std::size_t>(C),
            std::string("batchnorm ") + what + " must have one entry per channel (" +
                std::to_string(C) + ")");

  const std::size_t plane = static_cast<std::size_t>(H) * W;
  const std::size_t n = static_cast<std::size_t>(B) * plane;
  auto mean = std::make_shared<std::vector<double>>(C);
  auto inv = std::make_shared<std::vector<double>>(C);

  if (train) {
    // Two-pass statistics per channel.
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
      double m = 0.0;
      for (int b = 0; b < B; ++b) {
        const double* p = x->data.data() + (static_cast<std::size_t>(b) * C + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) m += p[i];
      }
      m /= static_cast<double>(n);
      double v = 0.0;
      for (int b = 0; b < B; ++b) {
        const double* p = x->data.data() + (static_cast<std::size_t>(b) * C + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = p[i] - m;
          v += d * d;
        }
      }
      v /= static_cast<double>(n);
      (*mean)[c] = m;
      (*inv)[c] = 1.0 / std::sqrt(v + eps);
      running_mean->data[c] = momentum * running_mean->data[c] + (1.0 - momentum) * m;
      running_var->data[c] = momentum * running_var->data[c] + (1.0 - momentum) * v;
    }
  } else {
    for (int c = 0; c < C; ++c) {
      (*mean)[c] = running_mean->data[c];
      (*inv)[c] = 1.0 / std::sqrt(running_var->data[c] + eps);
    }
  }

  auto y = new_output(tape, x->shape);
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const double* p = x->data.data() + (static_cast<std::size_t>(b) * C + c) * plane;
      double* q = y->data.data() + (static_cast<std::size_t>(b) * C + c) * plane;
      const double m = (*mean)[c], iv = (*inv)[c], g = scale->data[c], s = shift->data[c];
      for (std::size_t i = 0; i < plane; ++i) q[i] = g * (p[i] - m) * iv + s;
    }

  if (wants_grad(tape, {x, scale, shift})) {
    mark_output(y, {x, scale, shift});
    tape.record([=] {
#pragma omp parallel for schedule(static)
      for (int c = 0; c < C; ++c) {
        const double m = (*mean)[c], iv = (*inv)[c], g = scale->data[c];
        double s1 = 0.0, s2 = 0.0;
        for (int b = 0; b < B; ++b) {
          const std::size_t base = (static_cast<std::size_t>(b) * C + c) * plane;
          for (std::size_t i = 0; i < plane; ++i) {
            const double dyv = y->grad[base + i];
            s1 += dyv;
            s2 += dyv * (x->data[base + i] - m) * iv;
          }
        }
        if (scale->requires_grad) scale->grad[c] += s2;
        if (shift->requires_grad) shift->grad[c] += s1;
        if (x->requires_grad) {
          const double nd = static_cast<double>(n);
          for (int b = 0; b < B; ++b) {
            const std::size_t base = (static_cast<std::size_t>(b) * C + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
              const double dyv = y->grad[base + i];
              const double xh = (x->data[base + i] - m) * iv;
              // Batch statistics only depend on the input in train mode.
              if (train)
                x->grad[base + i] += g * iv * (dyv - s1 / nd - xh * s2 / nd);
              else
                x->grad[base + i] += g * iv * dyv;
            }
          }
        }
      }
    });
  }
  return y;
}

TensorPtr relu(Tape& tape, const TensorPtr& x) {
  auto y = new_output(tape, x->shape);
  const std::size_t n = x->numel();
#pragma omp parallel for schedule(static) if (n > 16384)
  for (std::size_t i = 0; i < n; ++i) y->data[i] = x->data[i] > 0.0 ? x->data[i] : 0.0;
  if (wants_grad(tape, {x})) {
    mark_output(y, {x});
    tape.record([=] {
      for (std::size_t i = 0; i < n; ++i)
        if (x->data[i] > 0.0) x->grad[i] += y->grad[i];
    });
  }
  return y;
}

TensorPtr add(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
  require(a && b && same_shape(*a, *b),
          "add requires equal shapes, got " + shape_str(a->shape) + " and " + shape_str(b->shape));
  auto y = new_output(tape, a->shape);
  const std::size_t n = a->numel();
#pragma omp parallel for schedule(static) if (n > 16384)
  for (std::size_t i = 0; i < n; ++i) y->data[i] = a->data[i] + b->data[i];
  if (wants_grad(tape, {a, b})) {
    mark_output(y, {a, b});
    tape.record([=] {
      if (a->requires_grad)
        for (std::size_t i = 0; i < n; ++i) a->grad[i] += y->grad[i];
      if (b->requires_grad)
        for (std::size_t i = 0; i < n; ++i) b->grad[i] += y->grad[i];
    });
  }
  return y;
}

TensorPtr concat_channels(Tape& tape, const std::vector<TensorPtr>& xs) {
  require(!xs.empty(), "concat_channels requires at least one operand");
  for (const auto& t : xs) require4d(t, "concat_channels operand");
  const int B = xs[0]->dim(0), H = xs[0]->dim(2), W = xs[0]->dim(3);
  int C = 0;
  for (const auto& t : xs) {
    require(t->dim(0) == B && t->dim(2) == H && t->dim(3) == W,
            "concat_channels operands must agree outside the channel axis; got " +
                shape_str(t->shape) + " vs " + shape_str(xs[0]->shape));
    C += t->dim(1);
  }
  auto y = new_output(tape, {B, C, H, W});
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  for (int b = 0; b < B; ++b) {
    std::size_t off = 0;
    for (const auto& t : xs) {
      const std::size_t blk = static_cast<std::size_t>(t->dim(1)) * plane;
      std::copy_n(t->data.data() + static_cast<std::size_t>(b) * blk, blk,
                  y->data.data() + (static_cast<std::size_t>(b) * C) * plane + off);
      off += blk;
    }
  }
  bool any = false;
  for (const auto& t : xs) any = any || t->requires_grad;
  if (tape.recording() && any) {
    y->requires_grad = true;
    y->ensure_grad();
    for (const auto& t : xs)
      if (t->requires_grad) t->ensure_grad();
    tape.record([=] {
      for (int b = 0; b < B; ++b) {
        std::size_t off = 0;
        for (const auto& t : xs) {
          const std::size_t blk = static_cast<std::size_t>(t->dim(1)) * plane;
          if (t->requires_grad) {
            const double* src = y->grad.data() + (static_cast<std::size_t>(b) * C) * plane + off;
            double* dst = t->grad.data() + static_cast<std::size_t>(b) * blk;
            for (std::size_t i = 0; i < blk; ++i) dst[i] += src[i];
          }
          off += blk;
        }
      }
    });
  }
  return y;
}

TensorPtr maxpool2x2(Tape& tape, const TensorPtr& x) {
  require4d(x, "maxpool2x2 input");
  const int B = x->dim(0), C = x->dim(1), IH = x->dim(2), IW = x->dim(3);
  require(IH % 2 == 0 && IW % 2 == 0, "maxpool2x2 requires even extents, got " + shape_str(x->shape));
  const int OH = IH / 2, OW = IW / 2;
  auto y = new_output(tape, {B, C, OH, OW});
  auto argmax = std::make_shared<std::vector<int>>(y->numel());
  kernels::maxpool2x2_forward(x->data.data(), y->data.data(), argmax->data(), B, C, IH, IW);
  if (wants_grad(tape, {x})) {
    mark_output(y, {x});
    tape.record([=] {
      kernels::maxpool2x2_backward(y->grad.data(), argmax->data(), x->grad.data(), B, C, OH, OW);
    });
  }
  return y;
}

TensorPtr linear(Tape& tape, const TensorPtr& x, const TensorPtr& w, const TensorPtr& b) {
  require(x && x->ndim() == 2, "linear input must be (B, F)");
  require(w && w->ndim() == 2, "linear weight must be (O, F)");
  const int B = x->dim(0), F = x->dim(1), O = w->dim(0);
  require(w->dim(1) == F, "linear: input has " + std::to_string(F) + " features but weight expects " +
                              std::to_string(w->dim(1)));
  if (b) require(b->numel() == static_cast<std::size_t>(O), "linear bias length must equal outputs");
  auto y = new_output(tape, {B, O});
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < B; ++i)
    for (int o = 0; o < O; ++o) {
      double acc = b ? b->data[o] : 0.0;
      const double* xr = x->data.data() + static_cast<std::size_t>(i) * F;
      const double* wr = w->data.data() + static_cast<std::size_t>(o) * F;
      for (int f = 0; f < F; ++f) acc += xr[f] * wr[f];
      y->data[static_cast<std::size_t>(i) * O + o] = acc;
    }
  if (wants_grad(tape, {x, w, b})) {
    mark_output(y, {x, w, b});
    tape.record([=] {
      if (x->requires_grad)
        for (int i = 0; i < B; ++i)
          for (int f = 0; f < F; ++f) {
            double acc = 0.0;
            for (int o = 0; o < O; ++o)
              acc += y->grad[static_cast<std::size_t>(i) * O + o] * w->data[static_cast<std::size_t>(o) * F + f];
            x->grad[static_cast<std::size_t>(i) * F + f] += acc;
          }
      if (w->requires_grad)
        for (int o = 0; o < O; ++o)
          for (int f = 0; f < F; ++f) {
            double acc = 0.0;
            for (int i = 0; i < B; ++i)
              acc += y->grad[static_cast<std::size_t>(i) * O + o] * x->data[static_cast<std::size_t>(i) * F + f];
            w->grad[static_cast<std::size_t>(o) * F + f] += acc;
          }
      if (b && b->requires_grad)
        for (int o = 0; o < O; ++o) {
          double acc = 0.0;
          for (int i = 0; i < B; ++i) acc += y->grad[static_cast<std::size_t>(i) * O + o];
          b->grad[o] += acc;
        }
    });
  }
  return y;
}

TensorPtr reshape(Tape& tape, const TensorPtr& x, std::vector<int> shape) {
  require(shape_numel(shape) == x->numel(),
          "reshape to " + shape_str(shape) + " does not preserve element count of " +
              shape_str(x->shape));
  auto y = new_output(tape, std::move(shape));
  y->data = x->data;
  if (wants_grad(tape, {x})) {
    mark_output(y, {x});
    tape.record([=] {
      for (std::size_t i = 0; i < x->numel(); ++i) x->grad[i] += y->grad[i];
    });
  }
  return y;
}

TensorPtr bilinear_up2(Tape& tape, const TensorPtr& x) {
  require4d(x, "bilinear_up2 input");
  const int B = x->dim(0), C = x->dim(1), IH = x->dim(2), IW = x->dim(3);
  auto y = new_output(tape, {B, C, IH * 2, IW * 2});
  kernels::bilinear_up2_forward(x->data.data(), y->data.data(), B, C, IH, IW);
  if (wants_grad(tape, {x})) {
    mark_output(y, {x});
    tape.record([=] { kernels::bilinear_up2_backward(y->grad.data(), x->grad.data(), B, C, IH, IW); });
  }
  return y;
}

TensorPtr bilinear_down2(Tape& tape, const TensorPtr& x) {
  require4d(x, "bilinear_down2 input");
  const int B = x->dim(0), C = x->dim(1), IH = x->dim(2), IW = x->dim(3);
  require(IH % 2 == 0 && IW % 2 == 0, "bilinear_down2 requires even extents, got " + shape_str(x->shape));
  auto y = new_output(tape, {B, C, IH / 2, IW / 2});
  kernels::bilinear_down2_forward(x->data.data(), y->data.data(), B, C, IH, IW);
  if (wants_grad(tape, {x})) {
    mark_output(y, {x});
    tape.record([=] { kernels::bilinear_down2_backward(y->grad.data(), x->grad.data(), B, C, IH, IW); });
  }
  return y;
}

TensorPtr scale(Tape& tape, const TensorPtr& x, double c) {
  auto y = new_output(tape, x->shape);
  for (std::size_t i = 0; i < x->numel(); ++i) y->data[i] = c * x->data[i];
  if (wants_grad(tape, {x})) {
    mark_output(y, {x});
    tape.record([=] {
      for (std::size_t i = 0; i < x->numel(); ++i) x->grad[i] += c * y->grad[i];
    });
  }
  return y;
}

TensorPtr sum(Tape& tape, const TensorPtr& x) {
  auto y = new_output(tape, {1});
  double acc = 0.0;
  for (double v : x->data) acc += v;
  y->data[0] = acc;
  if (wants_grad(tape, {x})) {
    mark_output(y, {x});
    tape.record([=] {
      const double g = y->grad[0];
      for (std::size_t i = 0; i < x->numel(); ++i) x->grad[i] += g;
    });
  }
  return y;
}

namespace {

inline int label_at(const TensorPtr& labels, std::size_t i) {
  return static_cast<int>(std::lround(labels->data[i]));
}

}  // namespace

TensorPtr softmax_ce(Tape& tape, const TensorPtr& logits, const TensorPtr& labels,
                     const TensorPtr& weights, int classes) {
  require4d(logits, "softmax_ce logits");
  require4d(labels, "softmax_ce labels");
  require(classes >= 2, "softmax_ce needs at least two classes");
  const int B = logits->dim(0), CH = logits->dim(1), H = logits->dim(2), W = logits->dim(3);
  require(CH % classes == 0, "softmax_ce channel extent " + std::to_string(CH) +
                                 " is not a multiple of the class count " + std::to_string(classes));
  const int G = CH / classes;
  require(labels->shape == std::vector<int>({B, G, H, W}),
          "softmax_ce labels must be " + shape_str({B, G, H, W}) + ", got " + shape_str(labels->shape));
  if (weights)
    require(same_shape(*labels, *weights), "softmax_ce weights must match the label shape");

  const std::size_t plane = static_cast<std::size_t>(H) * W;
  double acc = 0.0;
  std::size_t valid = 0;
  for (int b = 0; b < B; ++b)
    for (int g = 0; g < G; ++g)
      for (std::size_t i = 0; i < plane; ++i) {
        const std::size_t li = (static_cast<std::size_t>(b) * G + g) * plane + i;
        const int lab = label_at(labels, li);
        if (lab < 0) continue;
        require(lab < classes, "softmax_ce label out of range");
        double mx = -1e300;
        for (int k = 0; k < classes; ++k)
          mx = std::max(mx, logits->data[(static_cast<std::size_t>(b) * CH + g * classes + k) * plane + i]);
        double denom = 0.0;
        for (int k = 0; k < classes; ++k)
          denom += std::exp(logits->data[(static_cast<std::size_t>(b) * CH + g * classes + k) * plane + i] - mx);
        const double z = logits->data[(static_cast<std::size_t>(b) * CH + g * classes + lab) * plane + i] - mx;
        const double wv = weights ? weights->data[li] : 1.0;
        acc += wv * (std::log(denom) - z);
        ++valid;
      }
  auto y = new_output(tape, {1});
  y->data[0] = valid ? acc / static_cast<double>(valid) : 0.0;

  if (wants_grad(tape, {logits}) && valid) {
    mark_output(y, {logits});
    const double inv_n = 1.0 / static_cast<double>(valid);
    tape.record([=] {
      const double gout = y->grad[0];
      for (int b = 0; b < B; ++b)
        for (int g = 0; g < G; ++g)
          for (std::size_t i = 0; i < plane; ++i) {
            const std::size_t li = (static_cast<std::size_t>(b) * G + g) * plane + i;
            const int lab = label_at(labels, li);
            if (lab < 0) continue;
            const double wv = weights ? weights->data[li] : 1.0;
            double mx = -1e300;
            for (int k = 0; k < classes; ++k)
              mx = std::max(mx, logits->data[(static_cast<std::size_t>(b) * CH + g * classes + k) * plane + i]);
            double denom = 0.0;
            for (int k = 0; k < classes; ++k)
              denom += std::exp(logits->data[(static_cast<std::size_t>(b) * CH + g * classes + k) * plane + i] - mx);
            for (int k = 0; k < classes; ++k) {
              const std::size_t ci = (static_cast<std::size_t>(b) * CH + g * classes + k) * plane + i;
              const double p = std::exp(logits->data[ci] - mx) / denom;
              logits->grad[ci] += gout * wv * inv_n * (p - (k == lab ? 1.0 : 0.0));
            }
          }
    });
  } else if (wants_grad(tape, {logits})) {
    // All-ignored map: defined as zero loss with zero gradient.
    mark_output(y, {logits});
    tape.record([] {});
  }
  return y;
}

TensorPtr smooth_l1(Tape& tape, const TensorPtr& pred, const TensorPtr& target,
                    const TensorPtr& weights) {
  require(pred && target && same_shape(*pred, *target),
          "smooth_l1 pred and target must share a shape");
  require(weights && same_shape(*pred, *weights), "smooth_l1 weights must match the pred shape");
  const std::size_t n = pred->numel();
  double acc = 0.0;
  std::size_t active = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wv = weights->data[i];
    if (wv == 0.0) continue;
    ++active;
    const double d = pred->data[i] - target->data[i];
    const double a = std::abs(d);
    acc += wv * (a < 1.0 ? 0.5 * d * d : a - 0.5);
  }
  auto y = new_output(tape, {1});
  y->data[0] = active ? acc / static_cast<double>(active) : 0.0;
  if (wants_grad(tape, {pred})) {
    mark_output(y, {pred});
    if (active) {
      const double inv_n = 1.0 / static_cast<double>(active);
      tape.record([=] {
        const double gout = y->grad[0];
        for (std::size_t i = 0; i < n; ++i) {
          const double wv = weights->data[i];
          if (wv == 0.0) continue;
          const double d = pred->data[i] - target->data[i];
          const double g = std::abs(d) < 1.0 ? d : (d > 0.0 ? 1.0 : -1.0);
          pred->grad[i] += gout * wv * g * inv_n;
        }
      });
    } else {
      tape.record([] {});
    }
  }
  return y;
}

TensorPtr softmax_pair_fg(const TensorPtr& logits) {
  require4d(logits, "softmax_pair_fg logits");
  const int B = logits->dim(0), CH = logits->dim(1), H = logits->dim(2), W = logits->dim(3);
  require(CH % 2 == 0, "softmax_pair_fg needs an even channel extent");
  const int G = CH / 2;
  auto p = Tensor::make({B, G, H, W});
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  for (int b = 0; b < B; ++b)
    for (int g = 0; g < G; ++g)
      for (std::size_t i = 0; i < plane; ++i) {
        const double bg = logits->data[(static_cast<std::size_t>(b) * CH + 2 * g) * plane + i];
        const double fg = logits->data[(static_cast<std::size_t>(b) * CH + 2 * g + 1) * plane + i];
        const double m = std::max(bg, fg);
        const double eb = std::exp(bg - m), ef = std::exp(fg - m);
        p->data[(static_cast<std::size_t>(b) * G + g) * plane + i] = ef / (eb + ef);
      }
  return p;
}

}  // namespace ardet::ops
