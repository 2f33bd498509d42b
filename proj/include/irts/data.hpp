#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "irts/tensor.hpp"

namespace irts {

struct Observation {
    double time;   // in [0,1]
    double value;
};

struct TruthParams {
    double a = 0;  // shared offset, channels 0-1
    double b = 0;  // phase, channel 2
};

// One incomplete data case over a continuous time span. Each channel holds an
// unordered multiset of (time, value) pairs; no operation downstream may
// depend on storage order. Duplicate times within a channel are allowed.
struct IncompleteSeries {
    std::vector<std::vector<Observation>> channels;
    std::optional<int> label;
    std::optional<TruthParams> truth;

    std::size_t channel_count() const { return channels.size(); }
    std::size_t total_observations() const {
        std::size_t n = 0;
        for (const auto& c : channels) n += c.size();
        return n;
    }
    // Order-insensitive content fingerprint; used to pair a case with its
    // precomputed neighbor index.
    std::uint64_t fingerprint() const;
};

// Incomplete case over a finite index set of size n.
struct FiniteIncomplete {
    std::size_t n = 0;
    std::vector<std::size_t> indices;  // distinct, in [0, n)
    std::vector<double> values;
};

// Zero-filled fixed-dimension form of a finite-index case:
// values[t] = sum_i x_i 1{t_i = t}, mask bit set exactly at observed indices.
struct MaskedGrid {
    std::vector<double> values;
    std::vector<std::uint8_t> mask;

    bool operator==(const MaskedGrid&) const = default;
};

MaskedGrid mask(const FiniteIncomplete& c);
FiniteIncomplete unmask(const MaskedGrid& g);

// Reorders each channel's storage; the multiset content is unchanged.
// Test fixture for the permutation-invariance properties.
IncompleteSeries permute(const IncompleteSeries& c,
                         const std::vector<std::vector<std::size_t>>& perms);

struct DatasetMeta {
    int schema_version = 1;
    std::size_t channels = 0;
    std::uint64_t seed = 0;
    std::string description;
};

struct Dataset {
    DatasetMeta meta;
    std::vector<IncompleteSeries> cases;

    std::size_t size() const { return cases.size(); }
};

// JSON Lines: first line metadata, then one case per line. Values round-trip
// bit-exactly.
void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace irts
