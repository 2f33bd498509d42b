#pragma once

#include "irts/data.hpp"
#include "irts/rng.hpp"

namespace irts {

// 3-channel synthetic process: channels 0-1 share a random offset a, channel
// 2 has an independent phase b. Observation times come from a homogeneous
// Poisson process restricted to a random quarter-length window.
struct GeneratorConfig {
    std::size_t n_cases = 10000;
    double rate = 30.0;           // Poisson rate
    double window = 0.25;         // observation window length
    double window_start_max = 0.75;
    double noise_std = 0.01;
    std::uint64_t seed = 0;
    bool labeled = false;         // two-frequency classification variant

    void validate() const;
};

// Noiseless channel value; channel in {0,1,2}. For the labeled variant,
// channel 2 uses frequency 12 (class 0) or 15 (class 1).
double truth_value(const TruthParams& p, std::size_t channel, double t,
                   double ch3_freq = 12.0);

IncompleteSeries sample_case(const GeneratorConfig& cfg, Rng& rng);

// Deterministic given the seed; cases are generated on independent derived
// streams so the loop parallelizes without changing the output.
Dataset generate_dataset(const GeneratorConfig& cfg);

}  // namespace irts
