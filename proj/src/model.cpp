#include "gaitnet/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "gaitnet/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace gaitnet::model {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

int conv_pool_len(int len, int kernel, int pool, const char* stage) {
    len = len - kernel + 1;
    if (len <= 0)
        throw ConfigError(std::string("flatten_dim: non-positive length after ") + stage +
                          " conv");
    len /= pool;
    if (len <= 0)
        throw ConfigError(std::string("flatten_dim: non-positive length after ") + stage +
                          " pool");
    return len;
}

// Final pooled length per head: window -> conv -> pool -> conv -> pool.
int pooled_len(const GaitNetConfig& c) {
    int len = conv_pool_len(c.window_len, c.kernel_size, c.pool_size, "first");
    return conv_pool_len(len, c.kernel_size, c.pool_size, "second");
}

double init_bound(const LayerParams& p) {
    const int fan_in = p.kind == LayerKind::conv1d ? p.in * p.kernel : p.in;
    return 1.0 / std::sqrt(static_cast<double>(fan_in));
}

FeatureMap head_slice(const FeatureMap& window, int first_channel, int channels) {
    FeatureMap out(channels, window.length);
    std::copy_n(window.row(first_channel), static_cast<std::size_t>(channels) * window.length,
                out.values.data());
    return out;
}

ConvStackTrace run_conv_stack(const ModelParams& params, int base, FeatureMap input) {
    const int pool = params.config.pool_size;
    ConvStackTrace t;
    t.z1 = nn::conv1d_forward(input, params.layers[base]);
    t.p1 = nn::maxpool1d(nn::relu(t.z1), pool);
    t.z2 = nn::conv1d_forward(t.p1.output, params.layers[base + 1]);
    t.p2 = nn::maxpool1d(nn::relu(t.z2), pool);
    t.input = std::move(input);
    return t;
}

void check_window(const GaitNetConfig& c, const FeatureMap& window) {
    if (window.channels != c.input_channels || window.length != c.window_len)
        throw ConfigError("forward: window is " + std::to_string(window.channels) + "x" +
                          std::to_string(window.length) + ", model expects " +
                          std::to_string(c.input_channels) + "x" +
                          std::to_string(c.window_len));
}

}  // namespace

void validate(const GaitNetConfig& c) {
    require(c.num_classes == 2 || c.num_classes == 3,
            "config: num_classes must be 2 or 3, got " + std::to_string(c.num_classes));
    require(c.input_channels >= 1, "config: input_channels must be positive");
    require(c.head_mode != HeadMode::two_head || c.input_channels % 2 == 0,
            "config: two-head mode needs an even channel count, got " +
                std::to_string(c.input_channels));
    require(c.window_len >= 1, "config: window_len must be positive");
    require(c.kernel_size >= 1, "config: kernel_size must be positive");
    require(c.pool_size >= 1, "config: pool_size must be positive");
    require(c.conv_channels[0] >= 1 && c.conv_channels[1] >= 1,
            "config: conv_channels must be positive");
    require(c.fc_sizes[0] >= 1 && c.fc_sizes[1] >= 1, "config: fc_sizes must be positive");
    require(c.dropout_rate >= 0.0 && c.dropout_rate < 1.0,
            "config: dropout_rate must be in [0, 1)");
    pooled_len(c);  // rejects windows the conv/pool chain collapses to nothing
}

int flatten_dim(const GaitNetConfig& c) {
    validate(c);
    const int per_head = c.conv_channels[1] * pooled_len(c);
    return c.head_mode == HeadMode::two_head ? 2 * per_head : per_head;
}

ModelParams make_params(const GaitNetConfig& c) {
    const int flat = flatten_dim(c);
    ModelParams p;
    p.config = c;
    const int heads = c.head_mode == HeadMode::two_head ? 2 : 1;
    const int head_in = c.input_channels / heads;
    for (int h = 0; h < heads; ++h) {
        p.layers.push_back(LayerParams::make_conv(c.conv_channels[0], head_in, c.kernel_size));
        p.layers.push_back(
            LayerParams::make_conv(c.conv_channels[1], c.conv_channels[0], c.kernel_size));
    }
    p.layers.push_back(LayerParams::make_dense(c.fc_sizes[0], flat));
    p.layers.push_back(LayerParams::make_dense(c.fc_sizes[1], c.fc_sizes[0]));
    p.layers.push_back(LayerParams::make_dense(c.num_classes, c.fc_sizes[1]));
    return p;
}

std::size_t parameter_count(const GaitNetConfig& c) {
    const ModelParams p = make_params(c);
    std::size_t n = 0;
    for (const auto& l : p.layers) n += l.weight_count();
    return n;
}

ModelParams init_params(const GaitNetConfig& c, std::uint64_t seed) {
    ModelParams p = make_params(c);
    Rng rng(seed);
    for (auto& layer : p.layers) {
        const double bound = init_bound(layer);
        for (auto& w : layer.weights) w = rng.uniform(-bound, bound);
        for (auto& b : layer.bias) b = rng.uniform(-bound, bound);
    }
    return p;
}

ForwardTrace forward_traced(const ModelParams& params, const FeatureMap& window, bool training,
                            Rng& rng) {
    const GaitNetConfig& c = params.config;
    check_window(c, window);
    ForwardTrace t;
    const int heads = params.head_count();
    const int head_in = c.input_channels / heads;
    for (int h = 0; h < heads; ++h) {
        FeatureMap input =
            heads == 1 ? window : head_slice(window, h * head_in, head_in);
        t.heads.push_back(run_conv_stack(params, h * 2, std::move(input)));
    }

    int flat_size = 0;
    for (const auto& h : t.heads) flat_size += static_cast<int>(h.p2.output.values.size());
    t.flat = DenseVector(flat_size);
    int at = 0;
    for (const auto& h : t.heads) {
        std::copy(h.p2.output.values.begin(), h.p2.output.values.end(),
                  t.flat.values.begin() + at);
        at += static_cast<int>(h.p2.output.values.size());
    }

    const int fc = params.fc_base();
    t.z_fc1 = nn::fc_forward(t.flat, params.layers[fc]);
    t.d1 = nn::dropout(nn::relu(t.z_fc1), c.dropout_rate, training, rng);
    t.z_fc2 = nn::fc_forward(t.d1.output, params.layers[fc + 1]);
    t.d2 = nn::dropout(nn::relu(t.z_fc2), c.dropout_rate, training, rng);
    t.log_probs = nn::log_softmax(nn::fc_forward(t.d2.output, params.layers[fc + 2]));
    return t;
}

DenseVector forward(const ModelParams& params, const FeatureMap& window, bool training,
                    Rng& rng) {
    return forward_traced(params, window, training, rng).log_probs;
}

DenseVector forward(const ModelParams& params, const FeatureMap& window) {
    Rng unused(0);
    return forward(params, window, false, unused);
}

GradientSet make_gradients(const ModelParams& params) {
    GradientSet g;
    for (const auto& l : params.layers) g.layers.push_back(LayerGrad::zeros_like(l));
    return g;
}

double backprop(const ModelParams& params, const FeatureMap& window, int target, bool training,
                Rng& rng, GradientSet& grads, DenseVector* log_probs) {
    const GaitNetConfig& c = params.config;
    if (target < 0 || target >= c.num_classes)
        throw InputError("backprop: target " + std::to_string(target) + " outside " +
                         std::to_string(c.num_classes) + " classes");
    if (grads.layers.size() != params.layers.size())
        throw ConfigError("backprop: gradient set does not match layer count");

    ForwardTrace t = forward_traced(params, window, training, rng);
    const double loss = nn::nll_loss(t.log_probs, target);
    if (log_probs != nullptr) *log_probs = t.log_probs;

    // d(loss)/d(logits) = softmax - one_hot.
    DenseVector g(c.num_classes);
    for (int i = 0; i < c.num_classes; ++i) g[i] = std::exp(t.log_probs[i]);
    g[target] -= 1.0;

    const int fc = params.fc_base();
    DenseVector gd2 = nn::fc_backward_into(t.d2.output, params.layers[fc + 2], g,
                                           grads.layers[fc + 2]);
    for (int i = 0; i < gd2.size(); ++i) gd2[i] *= t.d2.mask[i];
    DenseVector gd1 = nn::fc_backward_into(t.d1.output, params.layers[fc + 1],
                                           nn::relu_backward(t.z_fc2, gd2),
                                           grads.layers[fc + 1]);
    for (int i = 0; i < gd1.size(); ++i) gd1[i] *= t.d1.mask[i];
    DenseVector gflat = nn::fc_backward_into(t.flat, params.layers[fc],
                                             nn::relu_backward(t.z_fc1, gd1), grads.layers[fc]);

    int at = 0;
    for (int h = 0; h < params.head_count(); ++h) {
        const ConvStackTrace& s = t.heads[static_cast<std::size_t>(h)];
        FeatureMap gp2(s.p2.output.channels, s.p2.output.length);
        std::copy_n(gflat.values.begin() + at, gp2.values.size(), gp2.values.begin());
        at += static_cast<int>(gp2.values.size());

        FeatureMap gz2 = nn::relu_backward(
            s.z2, nn::maxpool1d_backward(s.p2.argmax, gp2, s.z2.length));
        FeatureMap gp1 = nn::conv1d_backward_into(s.p1.output, params.layers[h * 2 + 1], gz2,
                                                  grads.layers[h * 2 + 1]);
        FeatureMap gz1 = nn::relu_backward(
            s.z1, nn::maxpool1d_backward(s.p1.argmax, gp1, s.z1.length));
        nn::conv1d_backward_into(s.input, params.layers[h * 2], gz1, grads.layers[h * 2],
                                 /*want_dx=*/false);
    }
    return loss;
}

int argmax_class(const DenseVector& log_probs) {
    int best = 0;
    for (int i = 1; i < log_probs.size(); ++i)
        if (log_probs[i] > log_probs[best]) best = i;
    return best;
}

int predict(const ModelParams& params, const FeatureMap& window) {
    return argmax_class(forward(params, window));
}

namespace {

constexpr char kMagic[8] = {'G', 'A', 'I', 'T', 'N', 'E', 'T', '1'};

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw SchemaError("checkpoint: truncated file");
    return v;
}

void write_tensor(std::ofstream& out, const std::vector<double>& v) {
    write_raw<std::uint64_t>(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_tensor(std::ifstream& in, std::vector<double>& v) {
    const auto n = read_raw<std::uint64_t>(in);
    if (n != v.size())
        throw SchemaError("checkpoint: tensor size " + std::to_string(n) + " != expected " +
                          std::to_string(v.size()));
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!in) throw SchemaError("checkpoint: truncated tensor data");
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("checkpoint: cannot open " + path + " for writing");
    out.write(kMagic, sizeof(kMagic));
    const GaitNetConfig& c = params.config;
    write_raw<std::int32_t>(out, c.num_classes);
    write_raw<std::int32_t>(out, c.input_channels);
    write_raw<std::int32_t>(out, c.window_len);
    write_raw<std::int32_t>(out, c.conv_channels[0]);
    write_raw<std::int32_t>(out, c.conv_channels[1]);
    write_raw<std::int32_t>(out, c.kernel_size);
    write_raw<std::int32_t>(out, c.pool_size);
    write_raw<std::int32_t>(out, c.fc_sizes[0]);
    write_raw<std::int32_t>(out, c.fc_sizes[1]);
    write_raw<std::int32_t>(out, c.head_mode == HeadMode::two_head ? 1 : 0);
    write_raw<double>(out, c.dropout_rate);
    write_raw<std::int32_t>(out, static_cast<std::int32_t>(params.layers.size()));
    for (const auto& l : params.layers) {
        write_tensor(out, l.weights);
        write_tensor(out, l.bias);
    }
    if (!out) throw InputError("checkpoint: write to " + path + " failed");
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw SchemaError("checkpoint: bad magic in " + path);
    GaitNetConfig c;
    c.num_classes = read_raw<std::int32_t>(in);
    c.input_channels = read_raw<std::int32_t>(in);
    c.window_len = read_raw<std::int32_t>(in);
    c.conv_channels[0] = read_raw<std::int32_t>(in);
    c.conv_channels[1] = read_raw<std::int32_t>(in);
    c.kernel_size = read_raw<std::int32_t>(in);
    c.pool_size = read_raw<std::int32_t>(in);
    c.fc_sizes[0] = read_raw<std::int32_t>(in);
    c.fc_sizes[1] = read_raw<std::int32_t>(in);
    c.head_mode = read_raw<std::int32_t>(in) == 1 ? HeadMode::two_head : HeadMode::single;
    c.dropout_rate = read_raw<double>(in);
    ModelParams params = make_params(c);
    const auto layer_count = read_raw<std::int32_t>(in);
    if (layer_count != static_cast<std::int32_t>(params.layers.size()))
        throw SchemaError("checkpoint: layer count " + std::to_string(layer_count) +
                          " != expected " + std::to_string(params.layers.size()));
    for (auto& l : params.layers) {
        read_tensor(in, l.weights);
        read_tensor(in, l.bias);
    }
    return params;
}

}  // namespace gaitnet::model
