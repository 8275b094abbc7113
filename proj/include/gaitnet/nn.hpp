#pragma once

#include <utility>
#include <vector>

#include "gaitnet/rng.hpp"
#include "gaitnet/tensor.hpp"

// Layer-level forward/backward operations. Shapes are validated here;
// the arithmetic lives in the kernels (parallel path by default, serial
// reference in tests).

namespace gaitnet::nn {

DenseVector fc_forward(const DenseVector& input, const LayerParams& params);

// Returns (parameter gradients, gradient wrt input).
std::pair<LayerGrad, DenseVector> fc_backward(const DenseVector& input,
                                              const LayerParams& params,
                                              const DenseVector& upstream);

// Accumulating form: adds parameter gradients into grad, returns the
// gradient wrt the input. Used by batched training to avoid per-sample
// gradient buffers.
DenseVector fc_backward_into(const DenseVector& input, const LayerParams& params,
                             const DenseVector& upstream, LayerGrad& grad);

// Valid (no-padding) cross-correlation, stride 1. Output length is
// input.length - kernel + 1.
FeatureMap conv1d_forward(const FeatureMap& input, const LayerParams& params);

std::pair<LayerGrad, FeatureMap> conv1d_backward(const FeatureMap& input,
                                                 const LayerParams& params,
                                                 const FeatureMap& upstream);

// Accumulating form; want_dx=false skips the input gradient (first layer).
FeatureMap conv1d_backward_into(const FeatureMap& input, const LayerParams& params,
                                const FeatureMap& upstream, LayerGrad& grad,
                                bool want_dx = true);

DenseVector relu(const DenseVector& input);
FeatureMap relu(const FeatureMap& input);

// Gradient at exactly zero is zero.
DenseVector relu_backward(const DenseVector& input, const DenseVector& upstream);
FeatureMap relu_backward(const FeatureMap& input, const FeatureMap& upstream);

struct PoolResult {
    FeatureMap output;
    std::vector<int> argmax;  // channel-major, input t index per pooled element
};

// Non-overlapping windows of size pool, stride pool; trailing remainder
// dropped. Ties resolve to the lowest index.
PoolResult maxpool1d(const FeatureMap& input, int pool);

FeatureMap maxpool1d_backward(const std::vector<int>& argmax, const FeatureMap& upstream,
                              int input_length);

DenseVector log_softmax(const DenseVector& input);

// -log_probs[target]; the mean over a batch is taken by the caller.
double nll_loss(const DenseVector& log_probs, int target);

struct DropoutResult {
    DenseVector output;
    std::vector<double> mask;  // 0 for dropped, 1/(1-rate) for kept
};

// training: each element zeroed with probability rate, survivors scaled by
// 1/(1-rate). Inference: identity (mask all ones).
DropoutResult dropout(const DenseVector& input, double rate, bool training, Rng& rng);

}  // namespace gaitnet::nn
