#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "gaitnet/kernels.hpp"
#include "gaitnet/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

// Times each kernel's serial reference against the OpenMP variant on the
// production shapes and verifies the outputs agree bit for bit.

namespace {

using gaitnet::Rng;
namespace ks = gaitnet::kernels::serial;
namespace kp = gaitnet::kernels::par;

std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    const auto start = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

void report(const char* name, const char* shape, double serial_ms, double par_ms, bool same) {
    std::printf("%-16s %-24s %10.3f %10.3f %8.2fx  %s\n", name, shape, serial_ms, par_ms,
                serial_ms / par_ms, same ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads: %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP not available; both columns run serially\n");
#endif
    std::printf("%-16s %-24s %10s %10s %9s\n", "kernel", "shape", "serial ms", "openmp ms",
                "speedup");

    Rng rng(7);
    const int reps = 20;

    {
        // fc1 of the default network: 512 x 1792.
        const int out = 512, in = 1792;
        auto W = random_vec(static_cast<std::size_t>(out) * in, rng);
        auto b = random_vec(out, rng);
        auto x = random_vec(in, rng);
        std::vector<double> ys(out), yp(out);
        const double ts = time_ms([&] { ks::fc_forward(W.data(), b.data(), x.data(), ys.data(), out, in); }, reps);
        const double tp = time_ms([&] { kp::fc_forward(W.data(), b.data(), x.data(), yp.data(), out, in); }, reps);
        report("fc_forward", "512x1792", ts, tp, bit_equal(ys, yp));

        auto g = random_vec(out, rng);
        std::vector<double> dWs(W.size(), 0.0), dWp(W.size(), 0.0);
        std::vector<double> dbs(out, 0.0), dbp(out, 0.0);
        std::vector<double> dxs(in, 0.0), dxp(in, 0.0);
        const double tbs = time_ms([&] {
            std::fill(dWs.begin(), dWs.end(), 0.0);
            std::fill(dbs.begin(), dbs.end(), 0.0);
            std::fill(dxs.begin(), dxs.end(), 0.0);
            ks::fc_backward(W.data(), x.data(), g.data(), dWs.data(), dbs.data(), dxs.data(),
                            out, in);
        }, reps);
        const double tbp = time_ms([&] {
            std::fill(dWp.begin(), dWp.end(), 0.0);
            std::fill(dbp.begin(), dbp.end(), 0.0);
            std::fill(dxp.begin(), dxp.end(), 0.0);
            kp::fc_backward(W.data(), x.data(), g.data(), dWp.data(), dbp.data(), dxp.data(),
                            out, in);
        }, reps);
        report("fc_backward", "512x1792", tbs, tbp,
               bit_equal(dWs, dWp) && bit_equal(dbs, dbp) && bit_equal(dxs, dxp));
    }

    {
        // conv2 of the default network: 64 <- 32 channels, kernel 3, len 59.
        gaitnet::kernels::Sizes1d s{64, 32, 3, 59};
        auto W = random_vec(static_cast<std::size_t>(s.out_ch) * s.in_ch * s.kernel, rng);
        auto b = random_vec(s.out_ch, rng);
        auto x = random_vec(static_cast<std::size_t>(s.in_ch) * s.in_len, rng);
        std::vector<double> ys(static_cast<std::size_t>(s.out_ch) * s.out_len());
        std::vector<double> yp(ys.size());
        const double ts = time_ms([&] { ks::conv1d_forward(W.data(), b.data(), x.data(), ys.data(), s); }, reps);
        const double tp = time_ms([&] { kp::conv1d_forward(W.data(), b.data(), x.data(), yp.data(), s); }, reps);
        report("conv1d_forward", "64x32 k3 len59", ts, tp, bit_equal(ys, yp));

        auto g = random_vec(ys.size(), rng);
        std::vector<double> dWs(W.size(), 0.0), dWp(W.size(), 0.0);
        std::vector<double> dbs(b.size(), 0.0), dbp(b.size(), 0.0);
        std::vector<double> dxs(x.size(), 0.0), dxp(x.size(), 0.0);
        const double tbs = time_ms([&] {
            std::fill(dWs.begin(), dWs.end(), 0.0);
            std::fill(dbs.begin(), dbs.end(), 0.0);
            std::fill(dxs.begin(), dxs.end(), 0.0);
            ks::conv1d_backward(W.data(), x.data(), g.data(), dWs.data(), dbs.data(),
                                dxs.data(), s);
        }, reps);
        const double tbp = time_ms([&] {
            std::fill(dWp.begin(), dWp.end(), 0.0);
            std::fill(dbp.begin(), dbp.end(), 0.0);
            std::fill(dxp.begin(), dxp.end(), 0.0);
            kp::conv1d_backward(W.data(), x.data(), g.data(), dWp.data(), dbp.data(),
                                dxp.data(), s);
        }, reps);
        report("conv1d_backward", "64x32 k3 len59", tbs, tbp,
               bit_equal(dWs, dWp) && bit_equal(dbs, dbp) && bit_equal(dxs, dxp));
    }

    {
        const std::int64_t n = 1 << 20;
        auto x = random_vec(n, rng);
        std::vector<double> ys(n), yp(n);
        const double ts = time_ms([&] { ks::relu_forward(x.data(), ys.data(), n); }, reps);
        const double tp = time_ms([&] { kp::relu_forward(x.data(), yp.data(), n); }, reps);
        report("relu_forward", "1M", ts, tp, bit_equal(ys, yp));
    }

    {
        const int channels = 64, len = 1 << 14, pool = 2;
        auto x = random_vec(static_cast<std::size_t>(channels) * len, rng);
        std::vector<double> ys(static_cast<std::size_t>(channels) * (len / pool));
        std::vector<double> yp(ys.size());
        std::vector<int> is(ys.size()), ip(ys.size());
        const double ts = time_ms([&] { ks::maxpool_forward(x.data(), ys.data(), is.data(), channels, len, pool); }, reps);
        const double tp = time_ms([&] { kp::maxpool_forward(x.data(), yp.data(), ip.data(), channels, len, pool); }, reps);
        report("maxpool_forward", "64x16384 p2", ts, tp, bit_equal(ys, yp) && is == ip);
    }

    {
        const std::int64_t n = 512 * 1792;
        auto g = random_vec(n, rng);
        auto p0 = random_vec(n, rng);
        auto ps = p0, pp = p0;
        std::vector<double> ms(n, 0.0), mp(n, 0.0), vs(n, 0.0), vp(n, 0.0);
        long ts_t = 0, tp_t = 0;
        const double ts = time_ms([&] { ks::adam_update(ps.data(), g.data(), ms.data(), vs.data(), n, 1e-4, 0.9, 0.999, 1e-8, 1e-4, ++ts_t); }, reps);
        const double tp = time_ms([&] { kp::adam_update(pp.data(), g.data(), mp.data(), vp.data(), n, 1e-4, 0.9, 0.999, 1e-8, 1e-4, ++tp_t); }, reps);
        report("adam_update", "917504 params", ts, tp,
               bit_equal(ps, pp) && bit_equal(ms, mp) && bit_equal(vs, vp));
    }
    return 0;
}
