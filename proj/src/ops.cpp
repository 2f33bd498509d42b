#include "irts/ops.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace irts {
namespace ops {

namespace {

void check_same_shape(const char* op, const NodeRef& a, const NodeRef& b) {
    if (!a->value.same_shape(b->value))
        throw ShapeError(std::string(op) + ": shape mismatch " + a->value.shape_str() +
                         " vs " + b->value.shape_str());
}

template <class F, class Dfdx>
NodeRef unary(const char* name, const NodeRef& a, F f, Dfdx dfdx) {
    Tensor out(a->value.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a->value[i]);
    return make_op(name, std::move(out), {a}, [dfdx](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        for (std::size_t i = 0; i < n.value.size(); ++i)
            p.grad[i] += n.grad[i] * dfdx(p.value[i], n.value[i]);
    });
}

}  // namespace

NodeRef add(const NodeRef& a, const NodeRef& b) {
    check_same_shape("add", a, b);
    Tensor out(a->value.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] + b->value[i];
    return make_op("add", std::move(out), {a, b}, [](Node& n) {
        for (int pi = 0; pi < 2; ++pi) {
            Node& p = *n.parents[pi];
            if (!p.requires_grad) continue;
            for (std::size_t i = 0; i < n.value.size(); ++i) p.grad[i] += n.grad[i];
        }
    });
}

NodeRef sub(const NodeRef& a, const NodeRef& b) {
    check_same_shape("sub", a, b);
    Tensor out(a->value.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] - b->value[i];
    return make_op("sub", std::move(out), {a, b}, [](Node& n) {
        Node& pa = *n.parents[0];
        Node& pb = *n.parents[1];
        for (std::size_t i = 0; i < n.value.size(); ++i) {
            if (pa.requires_grad) pa.grad[i] += n.grad[i];
            if (pb.requires_grad) pb.grad[i] -= n.grad[i];
        }
    });
}

NodeRef mul(const NodeRef& a, const NodeRef& b) {
    check_same_shape("mul", a, b);
    Tensor out(a->value.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] * b->value[i];
    return make_op("mul", std::move(out), {a, b}, [](Node& n) {
        Node& pa = *n.parents[0];
        Node& pb = *n.parents[1];
        for (std::size_t i = 0; i < n.value.size(); ++i) {
            if (pa.requires_grad) pa.grad[i] += n.grad[i] * pb.value[i];
            if (pb.requires_grad) pb.grad[i] += n.grad[i] * pa.value[i];
        }
    });
}

NodeRef div(const NodeRef& a, const NodeRef& b) {
    check_same_shape("div", a, b);
    Tensor out(a->value.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] / b->value[i];
    return make_op("div", std::move(out), {a, b}, [](Node& n) {
        Node& pa = *n.parents[0];
        Node& pb = *n.parents[1];
        for (std::size_t i = 0; i < n.value.size(); ++i) {
            Real inv = 1.0 / pb.value[i];
            if (pa.requires_grad) pa.grad[i] += n.grad[i] * inv;
            if (pb.requires_grad) pb.grad[i] -= n.grad[i] * pa.value[i] * inv * inv;
        }
    });
}

NodeRef neg(const NodeRef& a) {
    return unary("neg", a, [](Real x) { return -x; },
                 [](Real, Real) { return -1.0; });
}

NodeRef scale(const NodeRef& a, Real c) {
    return unary("scale", a, [c](Real x) { return c * x; },
                 [c](Real, Real) { return c; });
}

NodeRef add_scalar(const NodeRef& a, Real c) {
    return unary("add_scalar", a, [c](Real x) { return x + c; },
                 [](Real, Real) { return 1.0; });
}

NodeRef square(const NodeRef& a) {
    return unary("square", a, [](Real x) { return x * x; },
                 [](Real x, Real) { return 2.0 * x; });
}

NodeRef exp(const NodeRef& a) {
    return unary("exp", a, [](Real x) { return std::exp(x); },
                 [](Real, Real y) { return y; });
}

NodeRef log(const NodeRef& a) {
    return unary("log", a, [](Real x) { return std::log(x); },
                 [](Real x, Real) { return 1.0 / x; });
}

NodeRef tanh(const NodeRef& a) {
    return unary("tanh", a, [](Real x) { return std::tanh(x); },
                 [](Real, Real y) { return 1.0 - y * y; });
}

NodeRef sigmoid(const NodeRef& a) {
    return unary("sigmoid", a,
                 [](Real x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                                            : std::exp(x) / (1.0 + std::exp(x)); },
                 [](Real, Real y) { return y * (1.0 - y); });
}

NodeRef relu(const NodeRef& a) {
    return unary("relu", a, [](Real x) { return x > 0 ? x : 0.0; },
                 [](Real x, Real) { return x > 0 ? 1.0 : 0.0; });
}

NodeRef softplus(const NodeRef& a) {
    return unary("softplus", a,
                 [](Real x) { return x > 30 ? x : std::log1p(std::exp(x)); },
                 [](Real x, Real) {
                     return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                                   : std::exp(x) / (1.0 + std::exp(x));
                 });
}

NodeRef log_sigmoid(const NodeRef& a) {
    // log σ(x) = -softplus(-x)
    return unary("log_sigmoid", a,
                 [](Real x) { return x < -30 ? x : -std::log1p(std::exp(-x)); },
                 [](Real x, Real) {
                     return x >= 0 ? std::exp(-x) / (1.0 + std::exp(-x))
                                   : 1.0 / (1.0 + std::exp(x));
                 });
}

NodeRef sum(const NodeRef& a) {
    Real s = 0;
    for (std::size_t i = 0; i < a->value.size(); ++i) s += a->value[i];
    return make_op("sum", Tensor::scalar(s), {a}, [](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        for (std::size_t i = 0; i < p.value.size(); ++i) p.grad[i] += n.grad[0];
    });
}

NodeRef mean(const NodeRef& a) {
    std::size_t m = a->value.size();
    Real s = 0;
    for (std::size_t i = 0; i < m; ++i) s += a->value[i];
    Real inv = 1.0 / static_cast<Real>(m);
    return make_op("mean", Tensor::scalar(s * inv), {a}, [inv](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        for (std::size_t i = 0; i < p.value.size(); ++i) p.grad[i] += n.grad[0] * inv;
    });
}

NodeRef logsumexp(const NodeRef& a) {
    std::size_t m = a->value.size();
    if (m == 0) throw ShapeError("logsumexp: empty input");
    Real mx = a->value[0];
    for (std::size_t i = 1; i < m; ++i) mx = std::max(mx, a->value[i]);
    Real s = 0;
    for (std::size_t i = 0; i < m; ++i) s += std::exp(a->value[i] - mx);
    Real out = mx + std::log(s);
    return make_op("logsumexp", Tensor::scalar(out), {a}, [out](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        for (std::size_t i = 0; i < p.value.size(); ++i)
            p.grad[i] += n.grad[0] * std::exp(p.value[i] - out);
    });
}

NodeRef log_softmax(const NodeRef& logits) {
    std::size_t m = logits->value.size();
    Real mx = logits->value[0];
    for (std::size_t i = 1; i < m; ++i) mx = std::max(mx, logits->value[i]);
    Real s = 0;
    for (std::size_t i = 0; i < m; ++i) s += std::exp(logits->value[i] - mx);
    Real lse = mx + std::log(s);
    Tensor out(logits->value.shape());
    for (std::size_t i = 0; i < m; ++i) out[i] = logits->value[i] - lse;
    return make_op("log_softmax", std::move(out), {logits}, [](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        Real gsum = 0;
        for (std::size_t i = 0; i < n.value.size(); ++i) gsum += n.grad[i];
        for (std::size_t i = 0; i < n.value.size(); ++i)
            p.grad[i] += n.grad[i] - std::exp(n.value[i]) * gsum;
    });
}

NodeRef select(const NodeRef& v, std::size_t index) {
    if (index >= v->value.size()) throw ShapeError("select: index out of range");
    return make_op("select", Tensor::scalar(v->value[index]), {v}, [index](Node& n) {
        Node& p = *n.parents[0];
        if (p.requires_grad) p.grad[index] += n.grad[0];
    });
}

NodeRef stack_scalars(const std::vector<NodeRef>& xs) {
    Tensor out({xs.size()});
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i]->value.size() != 1) throw ShapeError("stack_scalars: non-scalar input");
        out[i] = xs[i]->value[0];
    }
    return make_op("stack_scalars", std::move(out), xs, [](Node& n) {
        for (std::size_t i = 0; i < n.parents.size(); ++i) {
            Node& p = *n.parents[i];
            if (p.requires_grad) p.grad[0] += n.grad[i];
        }
    });
}

NodeRef concat(const std::vector<NodeRef>& xs) {
    std::size_t total = 0;
    for (const auto& x : xs) total += x->value.size();
    Tensor out({total});
    std::size_t off = 0;
    for (const auto& x : xs)
        for (std::size_t i = 0; i < x->value.size(); ++i) out[off++] = x->value[i];
    return make_op("concat", std::move(out), xs, [](Node& n) {
        std::size_t off = 0;
        for (const auto& pr : n.parents) {
            Node& p = *pr;
            for (std::size_t i = 0; i < p.value.size(); ++i, ++off)
                if (p.requires_grad) p.grad[i] += n.grad[off];
        }
    });
}

NodeRef add_weighted(const std::vector<NodeRef>& xs, const std::vector<Real>& ws) {
    if (xs.size() != ws.size() || xs.empty())
        throw ShapeError("add_weighted: size mismatch");
    Real s = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i]->value.size() != 1) throw ShapeError("add_weighted: non-scalar input");
        s += ws[i] * xs[i]->value[0];
    }
    return make_op("add_weighted", Tensor::scalar(s), xs, [ws](Node& n) {
        for (std::size_t i = 0; i < n.parents.size(); ++i) {
            Node& p = *n.parents[i];
            if (p.requires_grad) p.grad[0] += ws[i] * n.grad[0];
        }
    });
}

NodeRef matmul(const NodeRef& a, const NodeRef& b) {
    const Tensor& A = a->value;
    const Tensor& B = b->value;
    if (A.ndim() != 2 || (B.ndim() != 2 && B.ndim() != 1))
        throw ShapeError("matmul: need (m,k)x(k,n) or (m,k)x(k)");
    std::size_t m = A.extent(0), k = A.extent(1);
    std::size_t n = B.ndim() == 2 ? B.extent(1) : 1;
    std::size_t bk = B.extent(0);
    if (bk != k)
        throw ShapeError("matmul: inner extents differ, " + A.shape_str() + " vs " +
                         B.shape_str());
    Tensor out(B.ndim() == 2 ? std::vector<std::size_t>{m, n}
                             : std::vector<std::size_t>{m});
    const Real* pa = A.data();
    const Real* pb = B.data();
    Real* po = out.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(num_threads()) if (num_threads() > 1 && m * n * k > 20000)
#endif
    for (long long i = 0; i < static_cast<long long>(m); ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            Real s = 0;
            for (std::size_t q = 0; q < k; ++q) s += pa[i * k + q] * pb[q * n + j];
            po[i * n + j] = s;
        }
    }
    return make_op("matmul", std::move(out), {a, b}, [m, n, k](Node& nd) {
        Node& pa = *nd.parents[0];
        Node& pb = *nd.parents[1];
        const Real* g = nd.grad.data();
        if (pa.requires_grad) {
            // dA = G · B^T
            Real* ga = pa.grad.data();
            const Real* vb = pb.value.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(num_threads()) if (num_threads() > 1 && m * n * k > 20000)
#endif
            for (long long i = 0; i < static_cast<long long>(m); ++i)
                for (std::size_t q = 0; q < k; ++q) {
                    Real s = 0;
                    for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * vb[q * n + j];
                    ga[i * k + q] += s;
                }
        }
        if (pb.requires_grad) {
            // dB = A^T · G
            Real* gb = pb.grad.data();
            const Real* va = pa.value.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(num_threads()) if (num_threads() > 1 && m * n * k > 20000)
#endif
            for (long long q = 0; q < static_cast<long long>(k); ++q)
                for (std::size_t j = 0; j < n; ++j) {
                    Real s = 0;
                    for (std::size_t i = 0; i < m; ++i) s += va[i * k + q] * g[i * n + j];
                    gb[q * n + j] += s;
                }
        }
    });
}

NodeRef dense(const NodeRef& w, const NodeRef& b, const NodeRef& x) {
    return add(matmul(w, x), b);
}

NodeRef conv1d(const NodeRef& input, const NodeRef& weight, const NodeRef& bias,
               std::size_t stride) {
    const Tensor& in = input->value;
    const Tensor& w = weight->value;
    const Tensor& bs = bias->value;
    if (in.ndim() != 2 || w.ndim() != 3 || bs.ndim() != 1)
        throw ShapeError("conv1d: expected input (C_in,L), weight (C_out,C_in,k), bias (C_out)");
    std::size_t cin = in.extent(0), len = in.extent(1);
    std::size_t cout = w.extent(0), k = w.extent(2);
    if (w.extent(1) != cin || bs.extent(0) != cout || len < k)
        throw ShapeError("conv1d: incompatible shapes " + in.shape_str() + " " +
                         w.shape_str());
    std::size_t lout = (len - k) / stride + 1;
    Tensor out({cout, lout});
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(num_threads()) if (num_threads() > 1)
#endif
    for (long long o = 0; o < static_cast<long long>(cout); ++o)
        for (std::size_t j = 0; j < lout; ++j) {
            Real s = bs[o];
            for (std::size_t c = 0; c < cin; ++c)
                for (std::size_t q = 0; q < k; ++q)
                    s += w.at3(o, c, q) * in.at2(c, j * stride + q);
            out.at2(o, j) = s;
        }
    return make_op("conv1d", std::move(out), {input, weight, bias},
                   [cin, cout, k, lout, stride](Node& n) {
                       Node& pin = *n.parents[0];
                       Node& pw = *n.parents[1];
                       Node& pb = *n.parents[2];
                       for (std::size_t o = 0; o < cout; ++o)
                           for (std::size_t j = 0; j < lout; ++j) {
                               Real g = n.grad.at2(o, j);
                               if (pb.requires_grad) pb.grad[o] += g;
                               for (std::size_t c = 0; c < cin; ++c)
                                   for (std::size_t q = 0; q < k; ++q) {
                                       if (pw.requires_grad)
                                           pw.grad.at3(o, c, q) +=
                                               g * pin.value.at2(c, j * stride + q);
                                       if (pin.requires_grad)
                                           pin.grad.at2(c, j * stride + q) +=
                                               g * pw.value.at3(o, c, q);
                                   }
                           }
                   });
}

NodeRef conv1d_transpose(const NodeRef& input, const NodeRef& weight,
                         const NodeRef& bias, std::size_t stride) {
    const Tensor& in = input->value;
    const Tensor& w = weight->value;
    const Tensor& bs = bias->value;
    if (in.ndim() != 2 || w.ndim() != 3 || bs.ndim() != 1)
        throw ShapeError(
            "conv1d_transpose: expected input (C_in,L), weight (C_in,C_out,k), bias (C_out)");
    std::size_t cin = in.extent(0), len = in.extent(1);
    std::size_t cout = w.extent(1), k = w.extent(2);
    if (w.extent(0) != cin || bs.extent(0) != cout)
        throw ShapeError("conv1d_transpose: incompatible shapes");
    std::size_t lout = (len - 1) * stride + k;
    Tensor out({cout, lout});
    for (std::size_t o = 0; o < cout; ++o)
        for (std::size_t j = 0; j < lout; ++j) out.at2(o, j) = bs[o];
    for (std::size_t c = 0; c < cin; ++c)
        for (std::size_t j = 0; j < len; ++j)
            for (std::size_t o = 0; o < cout; ++o)
                for (std::size_t q = 0; q < k; ++q)
                    out.at2(o, j * stride + q) += w.at3(c, o, q) * in.at2(c, j);
    return make_op("conv1d_transpose", std::move(out), {input, weight, bias},
                   [cin, cout, k, len, stride](Node& n) {
                       Node& pin = *n.parents[0];
                       Node& pw = *n.parents[1];
                       Node& pb = *n.parents[2];
                       if (pb.requires_grad) {
                           std::size_t lout = (len - 1) * stride + k;
                           for (std::size_t o = 0; o < cout; ++o)
                               for (std::size_t j = 0; j < lout; ++j)
                                   pb.grad[o] += n.grad.at2(o, j);
                       }
                       for (std::size_t c = 0; c < cin; ++c)
                           for (std::size_t j = 0; j < len; ++j)
                               for (std::size_t o = 0; o < cout; ++o)
                                   for (std::size_t q = 0; q < k; ++q) {
                                       Real g = n.grad.at2(o, j * stride + q);
                                       if (pw.requires_grad)
                                           pw.grad.at3(c, o, q) += g * pin.value.at2(c, j);
                                       if (pin.requires_grad)
                                           pin.grad.at2(c, j) += g * pw.value.at3(c, o, q);
                                   }
                   });
}

NodeRef reshape(const NodeRef& a, std::vector<std::size_t> shape) {
    if (shape_size(shape) != a->value.size())
        throw ShapeError("reshape: element count mismatch");
    Tensor out(std::move(shape),
               std::vector<Real>(a->value.data(), a->value.data() + a->value.size()));
    return make_op("reshape", std::move(out), {a}, [](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        for (std::size_t i = 0; i < n.value.size(); ++i) p.grad[i] += n.grad[i];
    });
}

NodeRef detach(const NodeRef& a) {
    return make_const(a->value, "detach");
}

NodeRef permute_vector(const NodeRef& v, const std::vector<std::size_t>& perm) {
    if (v->value.ndim() != 1 || perm.size() != v->value.size())
        throw ShapeError("permute_vector: bad permutation");
    Tensor out({perm.size()});
    for (std::size_t i = 0; i < perm.size(); ++i) out[i] = v->value[perm[i]];
    return make_op("permute_vector", std::move(out), {v}, [perm](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        for (std::size_t i = 0; i < perm.size(); ++i) p.grad[perm[i]] += n.grad[i];
    });
}

}  // namespace ops
}  // namespace irts
