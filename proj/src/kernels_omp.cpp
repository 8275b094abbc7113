#include "gaitnet/kernels.hpp"

#include <cmath>

// OpenMP kernels. Parallelism is over the outer independent index only
// (rows, channels, element chunks); each output element keeps the same
// inner accumulation order as the serial reference, so results are
// bit-identical for any thread count. The if-clauses skip team startup
// for the tiny shapes used in gradient checks.

namespace {
constexpr long kMinWork = 1 << 15;
}

namespace gaitnet::kernels::par {

void fc_forward(const double* W, const double* b, const double* x, double* y, int out, int in) {
    const long work = static_cast<long>(out) * in;
#pragma omp parallel for schedule(static) if (work > kMinWork)
    for (int i = 0; i < out; ++i) {
        const double* row = W + static_cast<std::size_t>(i) * in;
        double acc = 0.0;
        for (int j = 0; j < in; ++j) acc += row[j] * x[j];
        y[i] = acc + b[i];
    }
}

void fc_backward(const double* W, const double* x, const double* g, double* dW, double* db,
                 double* dx, int out, int in) {
    const long work = static_cast<long>(out) * in;
#pragma omp parallel for schedule(static) if (work > kMinWork)
    for (int i = 0; i < out; ++i) {
        const double gi = g[i];
        double* drow = dW + static_cast<std::size_t>(i) * in;
        for (int j = 0; j < in; ++j) drow[j] += gi * x[j];
        db[i] += gi;
    }
    if (dx != nullptr) {
        // Chunk the j range: dx[j] still accumulates over i in increasing
        // order, independent of the chunk split.
        constexpr int chunk = 512;
        const int nchunks = (in + chunk - 1) / chunk;
#pragma omp parallel for schedule(static) if (work > kMinWork)
        for (int cband = 0; cband < nchunks; ++cband) {
            const int j0 = cband * chunk;
            const int j1 = j0 + chunk < in ? j0 + chunk : in;
            for (int i = 0; i < out; ++i) {
                const double gi = g[i];
                const double* row = W + static_cast<std::size_t>(i) * in;
                for (int j = j0; j < j1; ++j) dx[j] += row[j] * gi;
            }
        }
    }
}

void conv1d_forward(const double* W, const double* b, const double* x, double* y, Sizes1d s) {
    const int out_len = s.out_len();
    const long work = static_cast<long>(s.out_ch) * s.in_ch * s.kernel * out_len;
#pragma omp parallel for schedule(static) if (work > kMinWork)
    for (int oc = 0; oc < s.out_ch; ++oc) {
        double* yrow = y + static_cast<std::size_t>(oc) * out_len;
        for (int t = 0; t < out_len; ++t) yrow[t] = b[oc];
        for (int ic = 0; ic < s.in_ch; ++ic) {
            const double* xrow = x + static_cast<std::size_t>(ic) * s.in_len;
            const double* wrow =
                W + (static_cast<std::size_t>(oc) * s.in_ch + ic) * s.kernel;
            for (int k = 0; k < s.kernel; ++k) {
                const double w = wrow[k];
                for (int t = 0; t < out_len; ++t) yrow[t] += w * xrow[t + k];
            }
        }
    }
}

void conv1d_backward(const double* W, const double* x, const double* g, double* dW, double* db,
                     double* dx, Sizes1d s) {
    const int out_len = s.out_len();
    const long work = static_cast<long>(s.out_ch) * s.in_ch * s.kernel * out_len;
#pragma omp parallel for schedule(static) if (work > kMinWork)
    for (int oc = 0; oc < s.out_ch; ++oc) {
        const double* grow = g + static_cast<std::size_t>(oc) * out_len;
        double acc_b = 0.0;
        for (int t = 0; t < out_len; ++t) acc_b += grow[t];
        db[oc] += acc_b;
        for (int ic = 0; ic < s.in_ch; ++ic) {
            const double* xrow = x + static_cast<std::size_t>(ic) * s.in_len;
            double* dwrow = dW + (static_cast<std::size_t>(oc) * s.in_ch + ic) * s.kernel;
            for (int k = 0; k < s.kernel; ++k) {
                double acc = 0.0;
                for (int t = 0; t < out_len; ++t) acc += grow[t] * xrow[t + k];
                dwrow[k] += acc;
            }
        }
    }
    if (dx != nullptr) {
#pragma omp parallel for schedule(static) if (work > kMinWork)
        for (int ic = 0; ic < s.in_ch; ++ic) {
            double* dxrow = dx + static_cast<std::size_t>(ic) * s.in_len;
            for (int oc = 0; oc < s.out_ch; ++oc) {
                const double* grow = g + static_cast<std::size_t>(oc) * out_len;
                const double* wrow =
                    W + (static_cast<std::size_t>(oc) * s.in_ch + ic) * s.kernel;
                for (int k = 0; k < s.kernel; ++k) {
                    const double w = wrow[k];
                    for (int t = 0; t < out_len; ++t) dxrow[t + k] += w * grow[t];
                }
            }
        }
    }
}

void relu_forward(const double* x, double* y, std::int64_t n) {
#pragma omp parallel for schedule(static) if (n > kMinWork)
    for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* g, double* dx, std::int64_t n) {
#pragma omp parallel for schedule(static) if (n > kMinWork)
    for (std::int64_t i = 0; i < n; ++i) dx[i] += x[i] > 0.0 ? g[i] : 0.0;
}

void maxpool_forward(const double* x, double* y, int* idx, int channels, int len, int pool) {
    const int out_len = len / pool;
    const long work = static_cast<long>(channels) * len;
#pragma omp parallel for schedule(static) if (work > kMinWork)
    for (int c = 0; c < channels; ++c) {
        const double* xrow = x + static_cast<std::size_t>(c) * len;
        double* yrow = y + static_cast<std::size_t>(c) * out_len;
        int* irow = idx + static_cast<std::size_t>(c) * out_len;
        for (int ot = 0; ot < out_len; ++ot) {
            int best = ot * pool;
            double best_v = xrow[best];
            for (int k = 1; k < pool; ++k) {
                const int t = ot * pool + k;
                if (xrow[t] > best_v) {
                    best_v = xrow[t];
                    best = t;
                }
            }
            yrow[ot] = best_v;
            irow[ot] = best;
        }
    }
}

void maxpool_backward(const double* g, const int* idx, double* dx, int channels, int out_len,
                      int len) {
    const long work = static_cast<long>(channels) * out_len;
#pragma omp parallel for schedule(static) if (work > kMinWork)
    for (int c = 0; c < channels; ++c) {
        const double* grow = g + static_cast<std::size_t>(c) * out_len;
        const int* irow = idx + static_cast<std::size_t>(c) * out_len;
        double* dxrow = dx + static_cast<std::size_t>(c) * len;
        for (int ot = 0; ot < out_len; ++ot) dxrow[irow[ot]] += grow[ot];
    }
}

void adam_update(double* p, const double* g, double* m, double* v, std::int64_t n, double lr,
                 double beta1, double beta2, double eps, double weight_decay, long t) {
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
#pragma omp parallel for schedule(static) if (n > kMinWork)
    for (std::int64_t i = 0; i < n; ++i) {
        p[i] -= lr * weight_decay * p[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
}

}  // namespace gaitnet::kernels::par
