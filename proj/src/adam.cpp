#include "irts/adam.hpp"

#include <cmath>

namespace irts {

Adam::Adam(std::vector<NodeRef> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.push_back(Tensor::zeros(p->value.shape()));
        v_.push_back(Tensor::zeros(p->value.shape()));
    }
}

void Adam::step() {
    ++t_;
    Real c1 = 1.0 - std::pow(cfg_.beta1, static_cast<Real>(t_));
    Real c2 = 1.0 - std::pow(cfg_.beta2, static_cast<Real>(t_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Node& p = *params_[pi];
        if (p.grad.size() != p.value.size()) continue;  // never touched by a graph
        Tensor& m = m_[pi];
        Tensor& v = v_[pi];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            Real g = p.grad[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            Real mh = m[i] / c1;
            Real vh = v[i] / c2;
            p.value[i] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
        }
        p.value.quantize();
        p.zero_grad();
    }
}

}  // namespace irts
