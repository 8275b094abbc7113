#pragma once

#include <cstdint>

// Raw loop kernels behind the layer operations. Two implementations share
// one signature set: kernels::serial is the plain reference, kernels::par
// adds OpenMP pragmas over the outer independent index. Every output
// element is written by exactly one iteration and its accumulation order
// never depends on the thread count, so both paths produce bit-identical
// results and reruns are reproducible.
//
// Backward kernels accumulate (+=) into their outputs; callers zero the
// buffers when fresh gradients are wanted.

namespace gaitnet::kernels {

struct Sizes1d {
    int out_ch;
    int in_ch;
    int kernel;
    int in_len;
    int out_len() const { return in_len - kernel + 1; }
};

#define GAITNET_DECLARE_KERNELS                                                               \
    /* y[i] = b[i] + sum_j W[i*in+j] x[j] */                                                  \
    void fc_forward(const double* W, const double* b, const double* x, double* y, int out,    \
                    int in);                                                                  \
    /* dW[i*in+j] += g[i] x[j]; db[i] += g[i]; dx[j] += sum_i W[i*in+j] g[i] (dx nullable) */ \
    void fc_backward(const double* W, const double* x, const double* g, double* dW,           \
                     double* db, double* dx, int out, int in);                                \
    /* valid cross-correlation, stride 1; x,y channel-major */                                \
    void conv1d_forward(const double* W, const double* b, const double* x, double* y,         \
                        Sizes1d s);                                                           \
    /* dx nullable for the first layer */                                                     \
    void conv1d_backward(const double* W, const double* x, const double* g, double* dW,       \
                         double* db, double* dx, Sizes1d s);                                  \
    void relu_forward(const double* x, double* y, std::int64_t n);                            \
    /* dx[i] += g[i] * (x[i] > 0) */                                                          \
    void relu_backward(const double* x, const double* g, double* dx, std::int64_t n);         \
    /* non-overlapping windows, floor semantics; idx stores the argmax t per output, ties     \
       to the lowest index */                                                                 \
    void maxpool_forward(const double* x, double* y, int* idx, int channels, int len,         \
                         int pool);                                                           \
    /* dx[c*len + idx] += g at pooled positions */                                            \
    void maxpool_backward(const double* g, const int* idx, double* dx, int channels,          \
                          int out_len, int len);                                              \
    /* decoupled weight decay, then bias-corrected Adam; t is the post-increment step */      \
    void adam_update(double* p, const double* g, double* m, double* v, std::int64_t n,        \
                     double lr, double beta1, double beta2, double eps, double weight_decay,  \
                     long t);

namespace serial {
GAITNET_DECLARE_KERNELS
}

namespace par {
GAITNET_DECLARE_KERNELS
}

#undef GAITNET_DECLARE_KERNELS

}  // namespace gaitnet::kernels
