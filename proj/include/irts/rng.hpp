#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace irts {

// Deterministic random stream. All distributions are implemented here rather
// than via <random> distribution objects, whose output is
// implementation-defined; this keeps generated datasets stable across
// standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(mix(seed)) {}

    std::uint64_t seed() const { return seed_; }

    // Independent derived stream; used for per-case generation so datasets
    // can be produced in parallel with a deterministic layout.
    Rng derived(std::uint64_t stream) const {
        return Rng(mix(seed_ ^ (0x9e3779b97f4a7c15ULL + stream * 0xbf58476d1ce4e5b9ULL)));
    }

    std::uint64_t next_u64() { return gen_(); }

    double uniform() {
        // 53-bit mantissa uniform in [0, 1)
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double normal() {
        // Box-Muller, spare discarded
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    int poisson(double lambda) {
        // Multiplicative inversion; fine for the small rates used here.
        double limit = std::exp(-lambda);
        double prod = uniform();
        int n = 0;
        while (prod > limit) {
            prod *= uniform();
            ++n;
        }
        return n;
    }

    int uniform_int(int n) {  // in [0, n)
        return static_cast<int>(gen_() % static_cast<std::uint64_t>(n));
    }

    std::string state() const {
        std::ostringstream os;
        os << seed_ << ' ' << gen_;
        return os.str();
    }

    void restore(const std::string& s) {
        std::istringstream is(s);
        is >> seed_ >> gen_;
    }

private:
    static std::uint64_t mix(std::uint64_t x) {
        // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace irts
