#pragma once

#include "irts/graph.hpp"

namespace irts {

struct AdamConfig {
    Real lr = 1e-3;
    Real beta1 = 0.9;
    Real beta2 = 0.999;
    Real eps = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list. Moment buffers are part
// of the checkpoint so a resumed run continues bit-exactly.
class Adam {
public:
    Adam() = default;
    Adam(std::vector<NodeRef> params, AdamConfig cfg);

    // Applies one update from the accumulated grads, then zeroes them.
    void step();

    const std::vector<NodeRef>& params() const { return params_; }
    AdamConfig& config() { return cfg_; }
    std::int64_t step_count() const { return t_; }

    // Exposed for checkpointing.
    std::vector<Tensor>& moments_m() { return m_; }
    std::vector<Tensor>& moments_v() { return v_; }
    void set_step_count(std::int64_t t) { t_ = t; }

private:
    std::vector<NodeRef> params_;
    AdamConfig cfg_;
    std::vector<Tensor> m_, v_;
    std::int64_t t_ = 0;
};

}  // namespace irts
