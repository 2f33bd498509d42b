#include "irts/gradcheck.hpp"

#include <cmath>

namespace irts {

GradCheckReport grad_check(const std::function<NodeRef()>& loss_builder,
                           const std::vector<NodeRef>& params,
                           const std::vector<std::string>& names, Real step,
                           Real tolerance) {
    if (step <= 0) throw std::invalid_argument("grad_check: step must be > 0");
    if (names.size() != params.size())
        throw std::invalid_argument("grad_check: names/params size mismatch");

    auto eval = [&]() {
        NodeRef root = loss_builder();
        if (root->value.size() != 1) throw GraphError("grad_check: non-scalar loss");
        return root;
    };

    {
        Real f1 = eval()->value[0];
        Real f2 = eval()->value[0];
        if (f1 != f2)
            throw NonDeterministicLossError(
                "grad_check: two identical evaluations disagree (" +
                std::to_string(f1) + " vs " + std::to_string(f2) + ")");
    }

    for (const auto& p : params) p->zero_grad();
    backward(eval());
    std::vector<Tensor> analytic;
    for (const auto& p : params) {
        analytic.push_back(p->grad.size() ? p->grad : Tensor::zeros(p->value.shape()));
        p->zero_grad();
    }

    GradCheckReport rep;
    rep.tolerance = tolerance;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Node& p = *params[pi];
        GradCheckReport::Entry e;
        e.name = names[pi];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            Real saved = p.value[i];
            p.value[i] = saved + step;
            Real fp = eval()->value[0];
            p.value[i] = saved - step;
            Real fm = eval()->value[0];
            p.value[i] = saved;
            Real numeric = (fp - fm) / (2.0 * step);
            Real a = analytic[pi][i];
            Real denom = std::max({std::fabs(a), std::fabs(numeric), Real(1e-12)});
            Real rel = std::fabs(a - numeric) / denom;
            if (a == 0.0 && numeric == 0.0) rel = 0.0;
            if (rel > e.max_rel_err) {
                e.max_rel_err = rel;
                e.worst_index = i;
            }
        }
        if (e.max_rel_err > rep.max_rel_err) {
            rep.max_rel_err = e.max_rel_err;
            rep.worst_param = e.name;
        }
        rep.entries.push_back(std::move(e));
    }
    rep.passed = rep.max_rel_err <= tolerance;
    return rep;
}

}  // namespace irts
