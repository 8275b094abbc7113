#include "gaitnet/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gaitnet/error.hpp"
#include "gaitnet/kernels.hpp"

namespace gaitnet::nn {

namespace {

namespace k = kernels::par;

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

}  // namespace

DenseVector fc_forward(const DenseVector& input, const LayerParams& params) {
    require(params.kind == LayerKind::dense, "fc_forward: layer is not dense");
    require(params.in == input.size(),
            "fc_forward: input size " + std::to_string(input.size()) + " != layer in " +
                std::to_string(params.in));
    DenseVector out(params.out);
    k::fc_forward(params.weights.data(), params.bias.data(), input.values.data(),
                  out.values.data(), params.out, params.in);
    return out;
}

std::pair<LayerGrad, DenseVector> fc_backward(const DenseVector& input,
                                              const LayerParams& params,
                                              const DenseVector& upstream) {
    LayerGrad grad = LayerGrad::zeros_like(params);
    DenseVector dinput = fc_backward_into(input, params, upstream, grad);
    return {std::move(grad), std::move(dinput)};
}

DenseVector fc_backward_into(const DenseVector& input, const LayerParams& params,
                             const DenseVector& upstream, LayerGrad& grad) {
    require(params.kind == LayerKind::dense, "fc_backward: layer is not dense");
    require(params.in == input.size(), "fc_backward: input size mismatch");
    require(params.out == upstream.size(), "fc_backward: upstream size mismatch");
    require(grad.weights.size() == params.weights.size() && grad.bias.size() == params.bias.size(),
            "fc_backward: gradient buffer shape mismatch");
    DenseVector dinput(params.in);
    k::fc_backward(params.weights.data(), input.values.data(), upstream.values.data(),
                   grad.weights.data(), grad.bias.data(), dinput.values.data(), params.out,
                   params.in);
    return dinput;
}

FeatureMap conv1d_forward(const FeatureMap& input, const LayerParams& params) {
    require(params.kind == LayerKind::conv1d, "conv1d_forward: layer is not conv");
    require(params.in == input.channels, "conv1d_forward: channel mismatch");
    require(input.length >= params.kernel,
            "conv1d_forward: input length " + std::to_string(input.length) + " < kernel " +
                std::to_string(params.kernel));
    kernels::Sizes1d s{params.out, params.in, params.kernel, input.length};
    FeatureMap out(params.out, s.out_len());
    k::conv1d_forward(params.weights.data(), params.bias.data(), input.values.data(),
                      out.values.data(), s);
    return out;
}

std::pair<LayerGrad, FeatureMap> conv1d_backward(const FeatureMap& input,
                                                 const LayerParams& params,
                                                 const FeatureMap& upstream) {
    LayerGrad grad = LayerGrad::zeros_like(params);
    FeatureMap dinput = conv1d_backward_into(input, params, upstream, grad);
    return {std::move(grad), std::move(dinput)};
}

FeatureMap conv1d_backward_into(const FeatureMap& input, const LayerParams& params,
                                const FeatureMap& upstream, LayerGrad& grad, bool want_dx) {
    require(params.kind == LayerKind::conv1d, "conv1d_backward: layer is not conv");
    require(params.in == input.channels, "conv1d_backward: channel mismatch");
    require(input.length >= params.kernel, "conv1d_backward: input shorter than kernel");
    kernels::Sizes1d s{params.out, params.in, params.kernel, input.length};
    require(upstream.channels == params.out && upstream.length == s.out_len(),
            "conv1d_backward: upstream shape mismatch");
    require(grad.weights.size() == params.weights.size() && grad.bias.size() == params.bias.size(),
            "conv1d_backward: gradient buffer shape mismatch");
    FeatureMap dinput;
    if (want_dx) dinput = FeatureMap(input.channels, input.length);
    k::conv1d_backward(params.weights.data(), input.values.data(), upstream.values.data(),
                       grad.weights.data(), grad.bias.data(),
                       want_dx ? dinput.values.data() : nullptr, s);
    return dinput;
}

DenseVector relu(const DenseVector& input) {
    DenseVector out(input.size());
    k::relu_forward(input.values.data(), out.values.data(), input.size());
    return out;
}

FeatureMap relu(const FeatureMap& input) {
    FeatureMap out(input.channels, input.length);
    k::relu_forward(input.values.data(), out.values.data(),
                    static_cast<std::int64_t>(input.values.size()));
    return out;
}

DenseVector relu_backward(const DenseVector& input, const DenseVector& upstream) {
    require(input.size() == upstream.size(), "relu_backward: shape mismatch");
    DenseVector out(input.size());
    k::relu_backward(input.values.data(), upstream.values.data(), out.values.data(),
                     input.size());
    return out;
}

FeatureMap relu_backward(const FeatureMap& input, const FeatureMap& upstream) {
    require(input.channels == upstream.channels && input.length == upstream.length,
            "relu_backward: shape mismatch");
    FeatureMap out(input.channels, input.length);
    k::relu_backward(input.values.data(), upstream.values.data(), out.values.data(),
                     static_cast<std::int64_t>(input.values.size()));
    return out;
}

PoolResult maxpool1d(const FeatureMap& input, int pool) {
    require(pool >= 1, "maxpool1d: pool must be >= 1");
    require(pool <= input.length,
            "maxpool1d: pool " + std::to_string(pool) + " > length " +
                std::to_string(input.length));
    const int out_len = input.length / pool;
    PoolResult r;
    r.output = FeatureMap(input.channels, out_len);
    r.argmax.assign(static_cast<std::size_t>(input.channels) * out_len, 0);
    k::maxpool_forward(input.values.data(), r.output.values.data(), r.argmax.data(),
                       input.channels, input.length, pool);
    return r;
}

FeatureMap maxpool1d_backward(const std::vector<int>& argmax, const FeatureMap& upstream,
                              int input_length) {
    require(argmax.size() == upstream.values.size(),
            "maxpool1d_backward: argmax/upstream size mismatch");
    FeatureMap dinput(upstream.channels, input_length);
    k::maxpool_backward(upstream.values.data(), argmax.data(), dinput.values.data(),
                        upstream.channels, upstream.length, input_length);
    return dinput;
}

DenseVector log_softmax(const DenseVector& input) {
    require(input.size() >= 1, "log_softmax: empty input");
    const double mx = *std::max_element(input.values.begin(), input.values.end());
    double sum = 0.0;
    for (double v : input.values) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    DenseVector out(input.size());
    for (int i = 0; i < input.size(); ++i) out[i] = input[i] - lse;
    return out;
}

double nll_loss(const DenseVector& log_probs, int target) {
    if (target < 0 || target >= log_probs.size())
        throw InputError("nll_loss: target " + std::to_string(target) + " out of range");
    return -log_probs[target];
}

DropoutResult dropout(const DenseVector& input, double rate, bool training, Rng& rng) {
    require(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0, 1)");
    DropoutResult r;
    r.output = DenseVector(input.size());
    r.mask.assign(input.values.size(), 1.0);
    if (!training || rate == 0.0) {
        r.output.values = input.values;
        return r;
    }
    const double inv_keep = 1.0 / (1.0 - rate);
    for (int i = 0; i < input.size(); ++i) {
        if (rng.uniform() < rate) {
            r.mask[i] = 0.0;
            r.output[i] = 0.0;
        } else {
            r.mask[i] = inv_keep;
            r.output[i] = input[i] * inv_keep;
        }
    }
    return r;
}

}  // namespace gaitnet::nn
