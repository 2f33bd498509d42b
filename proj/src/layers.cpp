#include "irts/layers.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace irts {

double epanechnikov(double u, double t, double beta) {
    if (beta <= 0) throw std::invalid_argument("epanechnikov: bandwidth must be > 0");
    double r = (u - t) / beta;
    return std::max(0.75 * (1.0 - r * r), 0.0);
}

void KernelSmootherConfig::validate() const {
    if (refs < 2) throw std::invalid_argument("kernel smoother: need at least 2 references");
    if (!(bandwidth > spacing()))
        throw std::invalid_argument(
            "kernel smoother: bandwidth must exceed reference spacing");
}

double PiecewiseLinearFilter::eval(double s) const {
    if (knots.size() < 2) throw std::invalid_argument("pwl filter: need at least 2 knots");
    if (s < 0.0 || s > width) return 0.0;
    PwlCoeffs c = pwl_coeffs(width, knots.size(), s);
    return knots[c.j0] * c.w0 + knots[c.j1] * c.w1;
}

PwlCoeffs pwl_coeffs(double width, std::size_t m, double s) {
    double pos = s * static_cast<double>(m - 1) / width;
    auto j0 = static_cast<std::size_t>(pos);
    if (j0 >= m - 1) return {m - 1, m - 1, 1.0, 0.0};  // s == width
    double frac = pos - static_cast<double>(j0);
    return {j0, j0 + 1, 1.0 - frac, frac};
}

void ContConvConfig::validate() const {
    if (grid < 2) throw std::invalid_argument("cont conv: need at least 2 grid points");
    if (knots < 2) throw std::invalid_argument("cont conv: need at least 2 knots");
    if (width <= 0) throw std::invalid_argument("cont conv: filter width must be > 0");
    if (c_in == 0 || c_out == 0) throw std::invalid_argument("cont conv: zero channels");
}

namespace {

std::vector<std::vector<Observation>> canonical_obs(const IncompleteSeries& c) {
    auto sorted = c.channels;
    for (auto& ch : sorted)
        std::sort(ch.begin(), ch.end(), [](const Observation& a, const Observation& b) {
            return a.time < b.time || (a.time == b.time && a.value < b.value);
        });
    return sorted;
}

}  // namespace

NeighborIndex build_conv_neighbors(const IncompleteSeries& c, const ContConvConfig& cfg) {
    cfg.validate();
    NeighborIndex nbr;
    nbr.case_fingerprint = c.fingerprint();
    nbr.grid = cfg.grid;
    nbr.support = cfg.width;
    nbr.sorted_obs = canonical_obs(c);
    nbr.flat_offset.resize(nbr.sorted_obs.size());
    std::size_t off = 0;
    for (std::size_t ch = 0; ch < nbr.sorted_obs.size(); ++ch) {
        nbr.flat_offset[ch] = off;
        off += nbr.sorted_obs[ch].size();
    }
    double dr = 1.0 / static_cast<double>(cfg.grid - 1);
    nbr.entries.resize(nbr.sorted_obs.size());
    for (std::size_t ch = 0; ch < nbr.sorted_obs.size(); ++ch) {
        nbr.entries[ch].resize(cfg.grid);
        for (std::size_t i = 0; i < nbr.sorted_obs[ch].size(); ++i) {
            double t = nbr.sorted_obs[ch][i].time;
            // Candidate window r in [t - h, t] by grid arithmetic, one point
            // of slack each side, then the exact predicate.
            auto lo = static_cast<long long>(std::floor((t - cfg.width) / dr)) - 1;
            auto hi = static_cast<long long>(std::ceil(t / dr)) + 1;
            lo = std::max(lo, 0LL);
            hi = std::min(hi, static_cast<long long>(cfg.grid) - 1);
            for (long long j = lo; j <= hi; ++j) {
                double s = t - cfg.grid_pos(static_cast<std::size_t>(j));
                if (s >= 0.0 && s <= cfg.width)
                    nbr.entries[ch][static_cast<std::size_t>(j)].push_back({i, s});
            }
        }
    }
    return nbr;
}

Tensor NeighborIndex::values_tensor() const {
    Tensor t({total_obs()});
    std::size_t k = 0;
    for (const auto& ch : sorted_obs)
        for (const auto& o : ch) t[k++] = o.value;
    return t;
}

std::vector<std::vector<NeighborIndex::Entry>> build_smoother_neighbors(
    const std::vector<double>& query_times, const KernelSmootherConfig& cfg) {
    cfg.validate();
    double du = cfg.spacing();
    std::vector<std::vector<NeighborIndex::Entry>> out(query_times.size());
    for (std::size_t q = 0; q < query_times.size(); ++q) {
        double t = query_times[q];
        auto lo = static_cast<long long>(std::floor((t - cfg.bandwidth) / du)) - 1;
        auto hi = static_cast<long long>(std::ceil((t + cfg.bandwidth) / du)) + 1;
        lo = std::max(lo, 0LL);
        hi = std::min(hi, static_cast<long long>(cfg.refs) - 1);
        for (long long i = lo; i <= hi; ++i) {
            double u = cfg.ref_pos(static_cast<std::size_t>(i));
            if (std::fabs(u - t) < cfg.bandwidth)
                out[q].push_back({static_cast<std::size_t>(i), u - t});
        }
    }
    return out;
}

NodeRef cont_conv(const ContConvConfig& cfg, const NodeRef& knots, const NodeRef& biases,
                  const NodeRef& xvals, const NeighborIndex& nbr) {
    cfg.validate();
    const Tensor& kn = knots->value;
    if (kn.ndim() != 3 || kn.extent(0) != cfg.c_in || kn.extent(1) != cfg.c_out ||
        kn.extent(2) != cfg.knots)
        throw ShapeError("cont_conv: knot bank shape " + kn.shape_str());
    if (biases->value.size() != cfg.c_out) throw ShapeError("cont_conv: bias shape");
    if (nbr.grid != cfg.grid || nbr.support != cfg.width ||
        nbr.sorted_obs.size() != cfg.c_in)
        throw NeighborMismatchError("cont_conv: neighbor index built for another config");
    if (xvals->value.size() != nbr.total_obs())
        throw ShapeError("cont_conv: value vector length mismatch");

    std::size_t C = cfg.c_in, K = cfg.c_out, L = cfg.grid, m = cfg.knots;
    double h = cfg.width;
    bool norm = cfg.normalize;
    Tensor out({cfg.out_channels(), L});
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(num_threads()) if (num_threads() > 1)
#endif
    for (long long k = 0; k < static_cast<long long>(K); ++k)
        for (std::size_t j = 0; j < L; ++j) {
            Real s = biases->value[k];
            for (std::size_t c = 0; c < C; ++c) {
                Real inv = norm && !nbr.entries[c][j].empty()
                               ? 1.0 / static_cast<Real>(nbr.entries[c][j].size())
                               : 1.0;
                for (const auto& e : nbr.entries[c][j]) {
                    PwlCoeffs pc = pwl_coeffs(h, m, e.offset);
                    Real w = kn.at3(c, k, pc.j0) * pc.w0 + kn.at3(c, k, pc.j1) * pc.w1;
                    s += inv * w * xvals->value[nbr.flat_offset[c] + e.obs];
                }
            }
            out.at2(static_cast<std::size_t>(k), j) = s;
        }
    if (norm)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t j = 0; j < L; ++j)
                out.at2(K + c, j) = nbr.entries[c][j].empty() ? 0.0 : 1.0;

    const NeighborIndex* nb = &nbr;
    return make_op("cont_conv", std::move(out), {knots, biases, xvals},
                   [nb, C, K, L, m, h, norm](Node& n) {
                       Node& pk = *n.parents[0];
                       Node& pb = *n.parents[1];
                       Node& px = *n.parents[2];
                       if (pk.requires_grad || pb.requires_grad) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(num_threads()) if (num_threads() > 1)
#endif
                           for (long long k = 0; k < static_cast<long long>(K); ++k)
                               for (std::size_t j = 0; j < L; ++j) {
                                   Real g = n.grad.at2(static_cast<std::size_t>(k), j);
                                   if (pb.requires_grad) pb.grad[k] += g;
                                   if (!pk.requires_grad) continue;
                                   for (std::size_t c = 0; c < C; ++c) {
                                       Real inv =
                                           norm && !nb->entries[c][j].empty()
                                               ? 1.0 / static_cast<Real>(
                                                           nb->entries[c][j].size())
                                               : 1.0;
                                       for (const auto& e : nb->entries[c][j]) {
                                           PwlCoeffs pc = pwl_coeffs(h, m, e.offset);
                                           Real x = px.value[nb->flat_offset[c] + e.obs];
                                           pk.grad.at3(c, k, pc.j0) += g * inv * pc.w0 * x;
                                           pk.grad.at3(c, k, pc.j1) += g * inv * pc.w1 * x;
                                       }
                                   }
                               }
                       }
                       if (px.requires_grad) {
                           for (std::size_t c = 0; c < C; ++c)
                               for (std::size_t j = 0; j < L; ++j) {
                                   Real inv = norm && !nb->entries[c][j].empty()
                                                  ? 1.0 / static_cast<Real>(
                                                              nb->entries[c][j].size())
                                                  : 1.0;
                                   for (const auto& e : nb->entries[c][j]) {
                                       PwlCoeffs pc = pwl_coeffs(h, m, e.offset);
                                       for (std::size_t k = 0; k < K; ++k) {
                                           Real w = pk.value.at3(c, k, pc.j0) * pc.w0 +
                                                    pk.value.at3(c, k, pc.j1) * pc.w1;
                                           px.grad[nb->flat_offset[c] + e.obs] +=
                                               n.grad.at2(k, j) * inv * w;
                                       }
                                   }
                               }
                       }
                   });
}

NodeRef cont_conv(const ContConvConfig& cfg, const NodeRef& knots, const NodeRef& biases,
                  const IncompleteSeries& c, const NeighborIndex& nbr) {
    if (nbr.case_fingerprint != c.fingerprint())
        throw NeighborMismatchError("cont_conv: neighbor index built for a different case");
    return cont_conv(cfg, knots, biases, make_const(nbr.values_tensor(), "obs"), nbr);
}

Tensor cont_conv_brute(const ContConvConfig& cfg, const Tensor& knots,
                       const Tensor& biases, const IncompleteSeries& c) {
    cfg.validate();
    auto sorted = canonical_obs(c);
    Tensor out({cfg.out_channels(), cfg.grid});
    for (std::size_t k = 0; k < cfg.c_out; ++k)
        for (std::size_t j = 0; j < cfg.grid; ++j) {
            Real s = biases[k];
            double r = cfg.grid_pos(j);
            for (std::size_t ch = 0; ch < cfg.c_in; ++ch) {
                Real acc = 0;
                std::size_t count = 0;
                for (const auto& o : sorted[ch]) {
                    double off = o.time - r;
                    if (off >= 0.0 && off <= cfg.width) {
                        PwlCoeffs pc = pwl_coeffs(cfg.width, cfg.knots, off);
                        acc += (knots.at3(ch, k, pc.j0) * pc.w0 +
                                knots.at3(ch, k, pc.j1) * pc.w1) *
                               o.value;
                        ++count;
                    }
                }
                s += cfg.normalize && count > 0 ? acc / static_cast<Real>(count) : acc;
                if (cfg.normalize && k == 0) out.at2(cfg.c_out + ch, j) = count > 0 ? 1.0 : 0.0;
            }
            out.at2(k, j) = s;
        }
    return out;
}

NodeRef kernel_smooth(const KernelSmootherConfig& cfg, const NodeRef& refs,
                      const std::vector<std::pair<std::size_t, double>>& queries) {
    cfg.validate();
    const Tensor& v = refs->value;
    if (v.ndim() != 2 || v.extent(1) != cfg.refs)
        throw ShapeError("kernel_smooth: refs must be (C, L)");
    // weights[q]: (ref index, K(u_i,t)/denominator); constant w.r.t. refs.
    std::vector<std::vector<std::pair<std::size_t, double>>> weights(queries.size());
    Tensor out({queries.size()});
    for (std::size_t q = 0; q < queries.size(); ++q) {
        auto [ch, t] = queries[q];
        if (ch >= v.extent(0)) throw ShapeError("kernel_smooth: channel out of range");
        double du = cfg.spacing();
        auto lo = static_cast<long long>(std::floor((t - cfg.bandwidth) / du)) - 1;
        auto hi = static_cast<long long>(std::ceil((t + cfg.bandwidth) / du)) + 1;
        lo = std::max(lo, 0LL);
        hi = std::min(hi, static_cast<long long>(cfg.refs) - 1);
        double denom = 0;
        for (long long i = lo; i <= hi; ++i) {
            double w = epanechnikov(cfg.ref_pos(static_cast<std::size_t>(i)), t,
                                    cfg.bandwidth);
            if (w > 0) {
                weights[q].push_back({static_cast<std::size_t>(i), w});
                denom += w;
            }
        }
        if (denom <= 0)
            throw EmptySupportError("kernel_smooth: empty support at t=" +
                                    std::to_string(t));
        Real s = 0;
        for (auto& [i, w] : weights[q]) {
            w /= denom;
            s += w * v.at2(ch, i);
        }
        out[q] = s;
    }
    std::vector<std::size_t> qch(queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q) qch[q] = queries[q].first;
    return make_op("kernel_smooth", std::move(out), {refs},
                   [weights = std::move(weights), qch = std::move(qch)](Node& n) {
                       Node& p = *n.parents[0];
                       if (!p.requires_grad) return;
                       for (std::size_t q = 0; q < weights.size(); ++q)
                           for (const auto& [i, w] : weights[q])
                               p.grad.at2(qch[q], i) += n.grad[q] * w;
                   });
}

}  // namespace irts
