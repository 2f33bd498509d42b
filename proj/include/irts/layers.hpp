#pragma once

#include <utility>

#include "irts/data.hpp"
#include "irts/graph.hpp"

namespace irts {

// Epanechnikov kernel K(u,t) = max(3/4 (1 - (|u-t|/beta)^2), 0).
double epanechnikov(double u, double t, double beta);

// Kernel-smoother head: L references evenly spaced over [0,1], interpolated
// with the Epanechnikov kernel. Invariant beta > reference spacing keeps the
// support of every query in [0,1] nonempty.
struct KernelSmootherConfig {
    std::size_t refs = 128;
    double bandwidth = 3.0 / 128.0;

    double ref_pos(std::size_t i) const {
        return static_cast<double>(i) / static_cast<double>(refs - 1);
    }
    double spacing() const { return 1.0 / static_cast<double>(refs - 1); }
    void validate() const;
};

// Degree-1 B-spline filter over [0, width]: m knot values on an evenly-spaced
// grid 0, width/(m-1), ..., width. Evaluates to 0 outside [0, width].
struct PiecewiseLinearFilter {
    double width = 0;
    std::vector<double> knots;

    double eval(double s) const;
};

// Linear interpolation coefficients for offset s in [0, width]:
// value = knots[j]*(1-frac) + knots[j+1]*frac. Shared by the forward and
// backward paths of the continuous convolution.
struct PwlCoeffs {
    std::size_t j0, j1;
    double w0, w1;
};
PwlCoeffs pwl_coeffs(double width, std::size_t m, double s);

// Continuous convolutional layer configuration. A bank of C_in x C_out
// filters with shared width and knot count, evaluated on an evenly-spaced
// output grid over [0,1].
struct ContConvConfig {
    std::size_t c_in = 3;
    std::size_t c_out = 64;
    std::size_t grid = 98;
    double width = 2.0 / 98.0;
    std::size_t knots = 7;
    // When set, each input channel's contribution at a grid point is divided
    // by the number of observations in that channel's support window, and one
    // extra occupancy channel per input channel (1 if the window is non-empty)
    // is appended to the output. This removes the dependence of the response
    // magnitude on local sampling density, which otherwise drowns shape cues
    // under Poisson count fluctuations.
    bool normalize = false;

    std::size_t out_channels() const { return c_out + (normalize ? c_in : 0); }
    double grid_pos(std::size_t j) const {
        return static_cast<double>(j) / static_cast<double>(grid - 1);
    }
    void validate() const;
};

// Precomputed neighbor sets for one case on one grid. Observations are stored
// in a canonical per-channel order (sorted by time then value) so summation
// order, and therefore the floating-point result, is independent of the
// input's storage order.
struct NeighborIndex {
    std::uint64_t case_fingerprint = 0;
    std::size_t grid = 0;
    double support = 0;
    // sorted_obs[c]: canonical observation order; flat_offset[c] is the start
    // of channel c in the flattened value vector.
    std::vector<std::vector<Observation>> sorted_obs;
    std::vector<std::size_t> flat_offset;
    struct Entry {
        std::size_t obs;    // index into sorted_obs[c]
        double offset;      // t_i - r_j
    };
    // entries[c][j]: observations with t - r_j in [0, support]
    std::vector<std::vector<std::vector<Entry>>> entries;

    std::size_t total_obs() const {
        std::size_t n = 0;
        for (const auto& c : sorted_obs) n += c.size();
        return n;
    }
    // Observed values in canonical flat order (channel-major).
    Tensor values_tensor() const;
};

// Neighbor sets via grid arithmetic: candidate window by division, then the
// exact membership predicate, so the result matches a brute-force scan.
NeighborIndex build_conv_neighbors(const IncompleteSeries& c, const ContConvConfig& cfg);

// Smoother-side neighbors: for each query time, the references u_i with
// |u_i - t| < beta (open support; the kernel is 0 at the boundary).
std::vector<std::vector<NeighborIndex::Entry>> build_smoother_neighbors(
    const std::vector<double>& query_times, const KernelSmootherConfig& cfg);

// V[k][j] = b_k + sum_c sum_{i: t_{c,i}-r_j in [0,h]} w_{c,k}(t_{c,i}-r_j) x_{c,i}.
// knots: (C_in, C_out, m) node; biases: (C_out); xvals: flat canonical values
// (may be a parameter leaf to differentiate w.r.t. observed values).
// nbr must outlive the returned graph; the backward pass reads it.
NodeRef cont_conv(const ContConvConfig& cfg, const NodeRef& knots, const NodeRef& biases,
                  const NodeRef& xvals, const NeighborIndex& nbr);

// Convenience form taking the case itself; verifies the neighbor index was
// built for this case (fingerprint match) and uses its values as constants.
NodeRef cont_conv(const ContConvConfig& cfg, const NodeRef& knots, const NodeRef& biases,
                  const IncompleteSeries& c, const NeighborIndex& nbr);

// Serial reference implementation: the naive triple loop over all
// (output channel, grid point, observation) combinations, no neighbor index.
Tensor cont_conv_brute(const ContConvConfig& cfg, const Tensor& knots,
                       const Tensor& biases, const IncompleteSeries& c);

// Nadaraya-Watson interpolation of per-channel reference values at arbitrary
// (channel, time) queries. refs: (C, L) node. Differentiable w.r.t. refs.
NodeRef kernel_smooth(const KernelSmootherConfig& cfg, const NodeRef& refs,
                      const std::vector<std::pair<std::size_t, double>>& queries);

struct EmptySupportError : std::runtime_error {
    explicit EmptySupportError(const std::string& msg) : std::runtime_error(msg) {}
};
struct NeighborMismatchError : std::runtime_error {
    explicit NeighborMismatchError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace irts
