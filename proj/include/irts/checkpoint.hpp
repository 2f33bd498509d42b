#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "irts/tensor.hpp"

namespace irts {

// Versioned binary bundle: header, then named tensors with shape and raw
// 64-bit values. Round-trips exactly. Besides the trainable parameters it
// carries optimizer moments and the training RNG state so a resumed run
// continues bit-identically.
struct Checkpoint {
    int schema_version = 1;
    std::string model_kind;   // "pvae" | "pbigan"
    std::string config_json;  // full training configuration
    std::uint64_t config_digest = 0;
    std::int64_t step = 0;
    std::int64_t epoch = 0;
    std::string rng_state;
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor* find(const std::string& name) const;
};

std::uint64_t fnv1a(const std::string& s);

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

struct CheckpointError : std::runtime_error {
    explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace irts
