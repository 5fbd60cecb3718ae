#pragma once

#include <vector>

#include "ardet/tape.hpp"
#include "ardet/tensor.hpp"

namespace ardet::ops {

// Differentiable layer set. Every op records its backward closure on the
// tape when recording is on and any input requires a gradient. 4-D tensors
// are (B, C, H, W).

TensorPtr conv2d(Tape& tape, const TensorPtr& x, const TensorPtr& w, const TensorPtr& b,
                 int stride, int pad);

// Fractionally strided convolution; the output must come out exactly 2x the
// input extent (kernel 4, pad 1 with up 2 by default elsewhere in the net).
TensorPtr tconv2d(Tape& tape, const TensorPtr& x, const TensorPtr& w, const TensorPtr& b,
                  int up = 2, int pad = 1);

TensorPtr batchnorm(Tape& tape, const TensorPtr& x, const TensorPtr& scale, const TensorPtr& shift,
                    const TensorPtr& running_mean, const TensorPtr& running_var, bool train,
                    double momentum = 0.9, double eps = 1e-5);

TensorPtr relu(Tape& tape, const TensorPtr& x);
TensorPtr add(Tape& tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr concat_channels(Tape& tape, const std::vector<TensorPtr>& xs);
TensorPtr maxpool2x2(Tape& tape, const TensorPtr& x);
TensorPtr linear(Tape& tape, const TensorPtr& x, const TensorPtr& w, const TensorPtr& b);
TensorPtr reshape(Tape& tape, const TensorPtr& x, std::vector<int> shape);
TensorPtr bilinear_up2(Tape& tape, const TensorPtr& x);
TensorPtr bilinear_down2(Tape& tape, const TensorPtr& x);
TensorPtr scale(Tape& tape, const TensorPtr& x, double c);
TensorPtr sum(Tape& tape, const TensorPtr& x);

// Mean over non-ignored elements of the weighted negative log-likelihood.
// logits: (B, G*K, H, W) with K classes per group; labels: (B, G, H, W) with
// values in {-1 (ignore), 0..K-1}; weights: same shape as labels or null for
// all-ones. An all-ignored label map yields loss 0 with zero gradient.
TensorPtr softmax_ce(Tape& tape, const TensorPtr& logits, const TensorPtr& labels,
                     const TensorPtr& weights, int classes = 2);

// Weighted smooth-L1 (quadratic below |d| = 1, linear above), averaged over
// elements with nonzero weight; zero such elements yield loss 0.
TensorPtr smooth_l1(Tape& tape, const TensorPtr& pred, const TensorPtr& target,
                    const TensorPtr& weights);

// Inference-only helper: per-group foreground probability of 2-way logits.
// Returns a (B, G, H, W) tensor; no tape interaction.
TensorPtr softmax_pair_fg(const TensorPtr& logits);

}  // namespace ardet::ops
