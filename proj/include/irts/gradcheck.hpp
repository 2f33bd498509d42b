#pragma once

#include <functional>
#include <string>
#include <vector>

#include "irts/graph.hpp"

namespace irts {

struct GradCheckReport {
    struct Entry {
        std::string name;
        Real max_rel_err = 0;
        std::size_t worst_index = 0;
    };
    std::vector<Entry> entries;
    Real max_rel_err = 0;
    std::string worst_param;
    bool passed = false;
    Real tolerance = 0;
};

// Compares analytic gradients against central finite differences
// (f(θ+e) − f(θ−e)) / (2e) coordinate-wise. The loss builder must rebuild the
// graph from the given parameter leaves on every call and be deterministic;
// two identical evaluations disagreeing is reported as an error.
// Relative error denominator: max(|analytic|, |numeric|, 1e-12).
GradCheckReport grad_check(const std::function<NodeRef()>& loss_builder,
                           const std::vector<NodeRef>& params,
                           const std::vector<std::string>& names,
                           Real step = 1e-5, Real tolerance = 1e-4);

struct NonDeterministicLossError : std::runtime_error {
    explicit NonDeterministicLossError(const std::string& msg)
        : std::runtime_error(msg) {}
};

}  // namespace irts
