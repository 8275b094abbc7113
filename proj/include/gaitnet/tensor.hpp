#pragma once

#include <cstddef>
#include <vector>

namespace gaitnet {

// Multichannel 1-D signal, channel-major: values[c * length + t].
struct FeatureMap {
    int channels = 0;
    int length = 0;
    std::vector<double> values;

    FeatureMap() = default;
    FeatureMap(int channels_, int length_)
        : channels(channels_), length(length_),
          values(static_cast<std::size_t>(channels_) * length_, 0.0) {}

    double& at(int c, int t) { return values[static_cast<std::size_t>(c) * length + t]; }
    double at(int c, int t) const { return values[static_cast<std::size_t>(c) * length + t]; }
    double* row(int c) { return values.data() + static_cast<std::size_t>(c) * length; }
    const double* row(int c) const { return values.data() + static_cast<std::size_t>(c) * length; }
};

struct DenseVector {
    std::vector<double> values;

    DenseVector() = default;
    explicit DenseVector(int size) : values(static_cast<std::size_t>(size), 0.0) {}
    DenseVector(std::initializer_list<double> init) : values(init) {}

    int size() const { return static_cast<int>(values.size()); }
    double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
};

enum class LayerKind { conv1d, dense };

// Weights and bias of one layer.
//   conv1d: weights[oc * in_ch * kernel + ic * kernel + k], bias[oc]
//   dense:  weights[i * in + j], bias[i]
struct LayerParams {
    LayerKind kind = LayerKind::dense;
    int out = 0;     // output units / output channels
    int in = 0;      // input units / input channels
    int kernel = 1;  // conv only
    std::vector<double> weights;
    std::vector<double> bias;

    static LayerParams make_dense(int out, int in) {
        LayerParams p;
        p.kind = LayerKind::dense;
        p.out = out;
        p.in = in;
        p.weights.assign(static_cast<std::size_t>(out) * in, 0.0);
        p.bias.assign(static_cast<std::size_t>(out), 0.0);
        return p;
    }

    static LayerParams make_conv(int out_ch, int in_ch, int kernel) {
        LayerParams p;
        p.kind = LayerKind::conv1d;
        p.out = out_ch;
        p.in = in_ch;
        p.kernel = kernel;
        p.weights.assign(static_cast<std::size_t>(out_ch) * in_ch * kernel, 0.0);
        p.bias.assign(static_cast<std::size_t>(out_ch), 0.0);
        return p;
    }

    std::size_t weight_count() const { return weights.size() + bias.size(); }
};

// Gradient (or moment) buffers shape-matched to one LayerParams.
struct LayerGrad {
    std::vector<double> weights;
    std::vector<double> bias;

    static LayerGrad zeros_like(const LayerParams& p) {
        LayerGrad g;
        g.weights.assign(p.weights.size(), 0.0);
        g.bias.assign(p.bias.size(), 0.0);
        return g;
    }

    void zero() {
        weights.assign(weights.size(), 0.0);
        bias.assign(bias.size(), 0.0);
    }
};

// One LayerGrad per model layer, in model layer order.
struct GradientSet {
    std::vector<LayerGrad> layers;

    void zero() {
        for (auto& l : layers) l.zero();
    }
};

}  // namespace gaitnet
