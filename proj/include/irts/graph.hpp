#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "irts/tensor.hpp"

namespace irts {

// One node of a define-by-run computation graph. Forward values are computed
// eagerly at construction; backward() walks the graph in reverse topological
// order. Graphs are built per minibatch and dropped afterwards; only
// parameter leaves persist across steps.
struct Node;
using NodeRef = std::shared_ptr<Node>;

struct Node {
    Tensor value;
    Tensor grad;  // lazily allocated; same shape as value
    bool requires_grad = false;
    bool is_leaf = true;
    std::string op_name = "leaf";
    std::vector<NodeRef> parents;
    // Reads this->grad and adds chain-rule contributions to parents' grads.
    std::function<void(Node&)> backward_fn;

    Tensor& ensure_grad() {
        if (grad.size() != value.size()) grad = Tensor::zeros(value.shape());
        return grad;
    }
    void zero_grad() {
        if (grad.size()) grad.fill(0.0);
    }
};

// Leaf holding a trainable parameter.
NodeRef make_param(Tensor value, std::string name = "param");
// Leaf excluded from gradient propagation.
NodeRef make_const(Tensor value, std::string name = "const");
// Interior node; requires_grad is inferred from parents.
NodeRef make_op(std::string op_name, Tensor value, std::vector<NodeRef> parents,
                std::function<void(Node&)> backward_fn);

// Nodes reachable from root, parents before children. Order is determined by
// construction order of the graph, so repeated runs are identical.
std::vector<Node*> topo_order(const NodeRef& root);

// Accumulates gradients of all reachable parameters. Root must be scalar.
// Repeated calls without zeroing accumulate, matching gradient summation
// across multiple loss terms.
void backward(const NodeRef& root);

struct GraphError : std::runtime_error {
    explicit GraphError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace irts
