#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gaitnet/nn.hpp"
#include "gaitnet/rng.hpp"
#include "gaitnet/tensor.hpp"

namespace gaitnet {

enum class HeadMode { single, two_head };

// Network geometry. Defaults give the 1792-feature flatten layer
// (120 -> 118 -> 59 -> 57 -> 28 with kernel 3 and floor pooling 2).
struct GaitNetConfig {
    int num_classes = 3;
    int input_channels = 6;
    int window_len = 120;
    int conv_channels[2] = {32, 64};
    int kernel_size = 3;
    int pool_size = 2;
    int fc_sizes[2] = {512, 128};
    double dropout_rate = 0.5;
    HeadMode head_mode = HeadMode::single;
};

// Layer order: single head [conv1, conv2, fc1, fc2, fc3];
// two-head [conv1a, conv2a, conv1b, conv2b, fc1, fc2, fc3] where head a
// takes the first input_channels/2 channels and head b the rest.
struct ModelParams {
    GaitNetConfig config;
    std::vector<LayerParams> layers;

    int head_count() const { return config.head_mode == HeadMode::two_head ? 2 : 1; }
    int fc_base() const { return head_count() * 2; }
};

namespace model {

// Throws ConfigError on any invalid field (classes outside {2,3}, odd
// channel split for two heads, non-positive sizes, dropout outside [0,1)).
void validate(const GaitNetConfig& config);

// Features entering fc1: conv_channels[1] x pooled length, summed over
// heads. Throws ConfigError when the length chain hits zero.
int flatten_dim(const GaitNetConfig& config);

std::size_t parameter_count(const GaitNetConfig& config);

// All weights and biases zero, shapes set.
ModelParams make_params(const GaitNetConfig& config);

// Uniform in +-1/sqrt(fan_in) per tensor; the draw order (layer by layer,
// weights then bias) is part of the format, so a seed pins the network.
ModelParams init_params(const GaitNetConfig& config, std::uint64_t seed);

// Everything the backward pass needs from one forward evaluation.
struct ConvStackTrace {
    FeatureMap input;
    FeatureMap z1;       // conv1 pre-activation
    nn::PoolResult p1;   // pool over relu(z1)
    FeatureMap z2;
    nn::PoolResult p2;
};

struct ForwardTrace {
    std::vector<ConvStackTrace> heads;
    DenseVector flat;
    DenseVector z_fc1;
    nn::DropoutResult d1;  // dropout over relu(z_fc1)
    DenseVector z_fc2;
    nn::DropoutResult d2;
    DenseVector log_probs;
};

// Inference pass (no dropout). Pure function of (params, window).
DenseVector forward(const ModelParams& params, const FeatureMap& window);

// Training-aware pass; rng is consumed only when training is true and
// dropout_rate > 0.
DenseVector forward(const ModelParams& params, const FeatureMap& window, bool training,
                    Rng& rng);

ForwardTrace forward_traced(const ModelParams& params, const FeatureMap& window, bool training,
                            Rng& rng);

// Runs forward + backward for one sample and accumulates parameter
// gradients into grads (callers zero it per batch and scale by 1/batch).
// Returns the sample NLL loss; log_probs is filled when non-null.
double backprop(const ModelParams& params, const FeatureMap& window, int target, bool training,
                Rng& rng, GradientSet& grads, DenseVector* log_probs = nullptr);

GradientSet make_gradients(const ModelParams& params);

// Argmax of log-probabilities, ties toward the lowest class index.
int predict(const ModelParams& params, const FeatureMap& window);

int argmax_class(const DenseVector& log_probs);

// Binary container: magic, config echo, raw little-endian tensors.
// save -> load -> forward is bit-identical.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace model
}  // namespace gaitnet
