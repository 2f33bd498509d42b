#pragma once

#include "irts/graph.hpp"

namespace irts {
namespace ops {

// Elementwise; shapes must match exactly (no broadcasting).
NodeRef add(const NodeRef& a, const NodeRef& b);
NodeRef sub(const NodeRef& a, const NodeRef& b);
NodeRef mul(const NodeRef& a, const NodeRef& b);
NodeRef div(const NodeRef& a, const NodeRef& b);
NodeRef neg(const NodeRef& a);
NodeRef scale(const NodeRef& a, Real c);
NodeRef add_scalar(const NodeRef& a, Real c);
NodeRef square(const NodeRef& a);
NodeRef exp(const NodeRef& a);
NodeRef log(const NodeRef& a);
NodeRef tanh(const NodeRef& a);
NodeRef sigmoid(const NodeRef& a);
NodeRef relu(const NodeRef& a);
NodeRef softplus(const NodeRef& a);

// log(sigmoid(x)), numerically stable in logit space.
NodeRef log_sigmoid(const NodeRef& a);

// Reductions to scalar.
NodeRef sum(const NodeRef& a);
NodeRef mean(const NodeRef& a);
NodeRef logsumexp(const NodeRef& a);  // over a vector

// Vector ops.
NodeRef log_softmax(const NodeRef& logits);
NodeRef select(const NodeRef& v, std::size_t index);  // vector element -> scalar
NodeRef stack_scalars(const std::vector<NodeRef>& xs);
NodeRef concat(const std::vector<NodeRef>& xs);  // flatten + concat to vector
NodeRef add_weighted(const std::vector<NodeRef>& xs, const std::vector<Real>& ws);  // scalars

// matmul: (m x k)·(k x n) -> (m x n), or (m x k)·(k) -> (m).
NodeRef matmul(const NodeRef& a, const NodeRef& b);

// Dense layer W·x + b for a vector x.
NodeRef dense(const NodeRef& w, const NodeRef& b, const NodeRef& x);

// 1-D convolution. input (C_in, L), weight (C_out, C_in, k), bias (C_out).
// out (C_out, (L - k)/stride + 1).
NodeRef conv1d(const NodeRef& input, const NodeRef& weight, const NodeRef& bias,
               std::size_t stride);

// Transposed 1-D convolution. input (C_in, L), weight (C_in, C_out, k),
// bias (C_out). out (C_out, (L-1)*stride + k).
NodeRef conv1d_transpose(const NodeRef& input, const NodeRef& weight,
                         const NodeRef& bias, std::size_t stride);

NodeRef reshape(const NodeRef& a, std::vector<std::size_t> shape);

// Forwards the value, blocks the gradient.
NodeRef detach(const NodeRef& a);

// Fixed coordinate permutation of a vector: out[i] = v[perm[i]].
NodeRef permute_vector(const NodeRef& v, const std::vector<std::size_t>& perm);

}  // namespace ops
}  // namespace irts
