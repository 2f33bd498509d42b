#include "irts/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace irts {

void GeneratorConfig::validate() const {
    if (rate <= 0) throw std::invalid_argument("generator: rate must be > 0");
    if (window <= 0 || window_start_max + window > 1.0 + 1e-12)
        throw std::invalid_argument("generator: window must fit inside [0,1]");
    if (noise_std < 0) throw std::invalid_argument("generator: negative noise std");
}

double truth_value(const TruthParams& p, std::size_t channel, double t,
                   double ch3_freq) {
    switch (channel) {
        case 0: return 0.8 * std::sin(20.0 * (t + p.a) + std::sin(20.0 * (t + p.a)));
        case 1:
            return -0.5 * std::sin(20.0 * (t + p.a + 20.0) +
                                   std::sin(20.0 * (t + p.a + 20.0)));
        case 2: return std::sin(ch3_freq * (t + p.b));
        default: throw std::invalid_argument("truth_value: channel must be 0, 1, or 2");
    }
}

IncompleteSeries sample_case(const GeneratorConfig& cfg, Rng& rng) {
    IncompleteSeries c;
    c.channels.resize(3);
    TruthParams p{10.0 * rng.normal(), rng.uniform(0.0, 10.0)};
    double ch3_freq = 12.0;
    if (cfg.labeled) {
        int label = rng.uniform() < 0.5 ? 0 : 1;
        c.label = label;
        ch3_freq = label == 0 ? 12.0 : 15.0;
    }
    for (std::size_t ch = 0; ch < 3; ++ch) {
        double d = rng.uniform(0.0, cfg.window_start_max);
        // Homogeneous Poisson process on the window: count, then uniform
        // order statistics.
        int n = rng.poisson(cfg.rate * cfg.window);
        std::vector<double> times(n);
        for (auto& t : times) t = rng.uniform(d, d + cfg.window);
        std::sort(times.begin(), times.end());
        for (double t : times)
            c.channels[ch].push_back(
                {t, truth_value(p, ch, t, ch3_freq) + cfg.noise_std * rng.normal()});
    }
    c.truth = p;
    return c;
}

Dataset generate_dataset(const GeneratorConfig& cfg) {
    cfg.validate();
    Dataset d;
    d.meta.channels = 3;
    d.meta.seed = cfg.seed;
    d.meta.description = cfg.labeled ? "synthetic 3-channel, labeled two-frequency"
                                     : "synthetic 3-channel";
    d.cases.resize(cfg.n_cases);
    Rng base(cfg.seed);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(num_threads()) if (num_threads() > 1)
#endif
    for (long long i = 0; i < static_cast<long long>(cfg.n_cases); ++i) {
        Rng rng = base.derived(static_cast<std::uint64_t>(i));
        d.cases[i] = sample_case(cfg, rng);
    }
    return d;
}

}  // namespace irts
