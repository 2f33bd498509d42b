// Benchmarks the continuous convolution: brute-force triple loop vs the
// neighbor-indexed fast path, serial and parallel. Also cross-checks that
// all three agree to near machine precision.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "irts/layers.hpp"
#include "irts/rng.hpp"

using namespace irts;

namespace {

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch())
        .count();
}

IncompleteSeries random_case(Rng& rng, std::size_t channels, std::size_t obs_per_ch) {
    IncompleteSeries c;
    c.channels.resize(channels);
    for (auto& ch : c.channels)
        for (std::size_t i = 0; i < obs_per_ch; ++i)
            ch.push_back({rng.uniform(), rng.normal()});
    return c;
}

Tensor randn(Rng& rng, std::vector<std::size_t> shape) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.3 * rng.normal();
    return t;
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t obs = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 200;
    int reps = argc > 2 ? std::atoi(argv[2]) : 50;
    int max_threads = static_cast<int>(std::thread::hardware_concurrency());
    if (max_threads < 1) max_threads = 1;

    ContConvConfig cfg;  // defaults: 3 -> 64 channels, 98 grid points, 7 knots
    Rng rng(1234);
    auto c = random_case(rng, cfg.c_in, obs);
    Tensor knots = randn(rng, {cfg.c_in, cfg.c_out, cfg.knots});
    Tensor biases = randn(rng, {cfg.c_out});
    auto knots_n = make_const(knots);
    auto biases_n = make_const(biases);
    NeighborIndex nbr = build_conv_neighbors(c, cfg);

    std::printf("cont_conv benchmark: %zu obs/channel, %zu->%zu channels, grid %zu, "
                "%d reps\n",
                obs, cfg.c_in, cfg.c_out, cfg.grid, reps);

    double t0 = now_ms();
    Tensor ref;
    for (int r = 0; r < reps; ++r) ref = cont_conv_brute(cfg, knots, biases, c);
    double brute_ms = (now_ms() - t0) / reps;

    set_threads(1);
    t0 = now_ms();
    NodeRef out1;
    for (int r = 0; r < reps; ++r) out1 = cont_conv(cfg, knots_n, biases_n, c, nbr);
    double serial_ms = (now_ms() - t0) / reps;

    set_threads(max_threads);
    t0 = now_ms();
    NodeRef outp;
    for (int r = 0; r < reps; ++r) outp = cont_conv(cfg, knots_n, biases_n, c, nbr);
    double par_ms = (now_ms() - t0) / reps;

    double err1 = 0, errp = 0, errbit = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        err1 = std::max(err1, std::fabs(out1->value[i] - ref[i]));
        errp = std::max(errp, std::fabs(outp->value[i] - ref[i]));
        errbit = std::max(errbit, std::fabs(outp->value[i] - out1->value[i]));
    }

    std::printf("  brute force (serial reference)  %9.3f ms\n", brute_ms);
    std::printf("  neighbor index, 1 thread        %9.3f ms  (%.1fx)\n", serial_ms,
                brute_ms / serial_ms);
    std::printf("  neighbor index, %2d threads      %9.3f ms  (%.1fx)\n", max_threads,
                par_ms, brute_ms / par_ms);
    std::printf("  max |fast - brute| = %.3g, |parallel - serial| = %.3g\n", err1,
                errbit);

    if (err1 > 1e-10 || errp > 1e-10 || errbit != 0.0) {
        std::fprintf(stderr, "MISMATCH between implementations\n");
        return 1;
    }
    return 0;
}
