#include "irts/graph.hpp"

#include <unordered_set>

namespace irts {

NodeRef make_param(Tensor value, std::string name) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->value.quantize();
    n->requires_grad = true;
    n->is_leaf = true;
    n->op_name = std::move(name);
    return n;
}

NodeRef make_const(Tensor value, std::string name) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->value.quantize();
    n->requires_grad = false;
    n->is_leaf = true;
    n->op_name = std::move(name);
    return n;
}

NodeRef make_op(std::string op_name, Tensor value, std::vector<NodeRef> parents,
                std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->value.quantize();
    n->is_leaf = false;
    n->op_name = std::move(op_name);
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward_fn);
    for (const auto& p : n->parents)
        if (p->requires_grad) n->requires_grad = true;
    return n;
}

std::vector<Node*> topo_order(const NodeRef& root) {
    std::vector<Node*> order;
    std::unordered_set<Node*> done;
    // Iterative post-order DFS; parents emitted before children.
    struct Frame {
        Node* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack{{root.get(), 0}};
    std::unordered_set<Node*> on_stack{root.get()};
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            Node* p = f.node->parents[f.next_parent++].get();
            if (!done.count(p)) {
                if (on_stack.count(p)) throw GraphError("cycle detected in graph");
                stack.push_back({p, 0});
                on_stack.insert(p);
            }
        } else {
            done.insert(f.node);
            on_stack.erase(f.node);
            order.push_back(f.node);
            stack.pop_back();
        }
    }
    return order;
}

void backward(const NodeRef& root) {
    if (root->value.size() != 1)
        throw GraphError("backward requires a scalar root, got shape " +
                         root->value.shape_str());
    auto order = topo_order(root);
    for (Node* n : order) {
        n->ensure_grad();
        // Interior grads are scratch; only leaf grads accumulate across calls.
        if (!n->is_leaf) n->zero_grad();
    }
    root->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (!n->requires_grad || n->is_leaf) continue;
        if (n->backward_fn) n->backward_fn(*n);
    }
}

}  // namespace irts
