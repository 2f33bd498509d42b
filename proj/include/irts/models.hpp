#pragma once

#include <optional>

#include "irts/layers.hpp"
#include "irts/ops.hpp"
#include "irts/rng.hpp"

namespace irts {

// Named trainable leaves of one model. Checkpointing iterates this in
// registration order.
struct ParamStore {
    std::vector<std::pair<std::string, NodeRef>> items;

    NodeRef add(const std::string& name, Tensor init) {
        items.emplace_back(name, make_param(std::move(init), name));
        return items.back().second;
    }
    NodeRef find(const std::string& name) const;
    std::vector<NodeRef> nodes() const;
    std::vector<std::string> names() const;
};

struct EncoderConfig {
    ContConvConfig conv;
    std::size_t conv2_out = 24;
    std::size_t conv2_kernel = 5;
    std::size_t conv2_stride = 2;
    std::size_t hidden = 64;
    std::size_t latent = 16;
    std::size_t iaf_stages = 2;
    std::size_t iaf_hidden_mult = 4;
    // Optional position-pooled branch: conv layers over the raw
    // continuous-conv responses (first layer with kernel pool_kernel, the
    // rest 1x1), globally mean-pooled and concatenated with the strided-conv
    // features. Translation-invariant by construction, which helps heads that
    // must not key on absolute observation times.
    std::size_t pool_layers = 0;
    std::size_t pool_width = 32;
    std::size_t pool_kernel = 1;
    // Use the pooled branch exclusively (drop the strided-conv flatten branch,
    // which keys on absolute grid positions and can memorize instead of
    // generalizing when the observation window location is random).
    bool pool_only = false;

    std::size_t conv2_len() const {
        return (conv.grid - conv2_kernel) / conv2_stride + 1;
    }
};

// One inverse autoregressive flow stage: per-coordinate shift and log-scale,
// each a masked-dense (MADE) function of strictly preceding coordinates.
// Output layers start at zero so the stage is the identity at init.
// Log-scale is bounded: 5*tanh(raw).
struct IafStage {
    NodeRef w1, b1, w_shift, b_shift, w_scale, b_scale;
    NodeRef mask1, mask2;  // constants

    // Returns (shift, log_scale), both length-d vectors.
    std::pair<NodeRef, NodeRef> shift_scale(const NodeRef& z) const;
};

struct PosteriorSample {
    NodeRef z;
    NodeRef log_q;  // null when density not requested (P-BiGAN encoder)
};

// Continuous-time encoder: continuous convolution, a strided 1-D conv, dense
// trunk, Gaussian heads, optional IAF stages.
class Encoder {
public:
    Encoder() = default;
    Encoder(const EncoderConfig& cfg, ParamStore& store, const std::string& prefix,
            Rng& init_rng);

    // (mu, log-variance); permutation invariant by construction.
    std::pair<NodeRef, NodeRef> encode(const IncompleteSeries& c,
                                       const NeighborIndex& nbr) const;
    // Shared trunk up to the hidden feature vector (used by the discriminator).
    NodeRef features(const NodeRef& xvals, const NeighborIndex& nbr) const;

    // z = IAF(mu + sigma*eps); log q by change of variables when requested.
    PosteriorSample sample_posterior(const NodeRef& mu, const NodeRef& logvar,
                                     const Tensor& eps, bool with_density) const;

    const EncoderConfig& config() const { return cfg_; }

private:
    EncoderConfig cfg_;
    NodeRef knots_, conv_bias_, w2_, b2_, w3_, b3_, w_mu_, b_mu_, w_lv_, b_lv_;
    std::vector<NodeRef> wp_, bp_;  // pooled branch, empty when pool_layers == 0
    std::vector<IafStage> iaf_;
    std::vector<std::size_t> reversal_;  // coordinate flip between stages
};

struct DecoderConfig {
    std::size_t latent = 16;
    std::size_t hidden = 64;
    std::size_t channels = 3;
    KernelSmootherConfig smoother;   // refs = 128, bandwidth = 3/128
    std::size_t pre_channels = 8;
    std::size_t pre_len = 16;
    std::size_t deconv_kernel = 8;
    std::size_t deconv_stride = 8;
    double sigma = 0.1;  // observation noise std, pre-defined

    void validate() const;
};

// Deterministic decoder: dense trunk, transposed 1-D convolution to the
// reference grid, kernel-smoother interpolation to arbitrary times.
class Decoder {
public:
    Decoder() = default;
    Decoder(const DecoderConfig& cfg, ParamStore& store, const std::string& prefix,
            Rng& init_rng);

    NodeRef references(const NodeRef& z) const;  // (C, L)
    NodeRef decode(const NodeRef& z,
                   const std::vector<std::pair<std::size_t, double>>& queries) const;

    const DecoderConfig& config() const { return cfg_; }

private:
    DecoderConfig cfg_;
    NodeRef w1_, b1_, w2_, b2_, wd_, bd_;
};

// Two dense layers from z to class logits.
class Classifier {
public:
    Classifier() = default;
    Classifier(std::size_t latent, std::size_t hidden, std::size_t classes,
               ParamStore& store, const std::string& prefix, Rng& init_rng);

    NodeRef logits(const NodeRef& z) const;
    std::size_t n_classes() const { return classes_; }

private:
    std::size_t classes_ = 0;
    NodeRef w1_, b1_, w2_, b2_;
};

// Case branch (continuous-conv featurizer, same architecture as the encoder
// trunk with separate parameters), code branch (two dense layers on z), and
// a two-layer fusion head producing one logit.
class Discriminator {
public:
    Discriminator() = default;
    Discriminator(const EncoderConfig& cfg, std::size_t z_embed, ParamStore& store,
                  const std::string& prefix, Rng& init_rng);

    NodeRef logit(const NodeRef& xvals, const NeighborIndex& nbr,
                  const NodeRef& z) const;

private:
    Encoder featurizer_;  // heads unused; features() only
    std::size_t z_embed_ = 0;
    NodeRef wz1_, bz1_, wz2_, bz2_, wf1_, bf1_, wf2_, bf2_;
};

enum class ModelKind { pvae, pbigan };

struct ModelConfig {
    ModelKind kind = ModelKind::pvae;
    EncoderConfig encoder;
    DecoderConfig decoder;
    bool with_classifier = false;
    std::size_t n_classes = 2;
    std::size_t cls_hidden = 32;
    std::size_t disc_z_embed = 32;
};

struct Model {
    ModelConfig cfg;
    ParamStore params;
    Encoder encoder;
    Decoder decoder;
    std::optional<Classifier> classifier;
    std::optional<Discriminator> discriminator;

    static Model build(const ModelConfig& cfg, std::uint64_t init_seed);

    std::vector<NodeRef> generator_params() const;      // encoder+decoder+classifier
    std::vector<NodeRef> discriminator_params() const;  // prefix "disc."
    void zero_all_grads() const;
};

// Observed (channel, time) queries and values of a case in the canonical
// order of its neighbor index.
std::vector<std::pair<std::size_t, double>> observed_queries(const NeighborIndex& nbr);

// Negated variational bound. K = 1: negative ELBO estimate; K > 1: negative
// IWAE bound via stabilized log-mean-exp. eps: K standard-normal draws of the
// latent dimension, supplied by the caller.
NodeRef pvae_loss(const Model& m, const IncompleteSeries& c, const NeighborIndex& nbr,
                  const std::vector<Tensor>& eps);

struct PbiganLosses {
    NodeRef d_loss;
    NodeRef g_loss;
    NodeRef ae_term;  // null when lambda == 0
};

// Minimax losses with the non-saturating generator objective and optional
// L2 autoencoding term. The donor case contributes only its index set t'.
// Gradients reach the discriminator through d_loss only (encoder/decoder
// outputs are detached there) and the generator through g_loss only.
PbiganLosses pbigan_losses(const Model& m, const IncompleteSeries& real_case,
                           const NeighborIndex& real_nbr,
                           const NeighborIndex& donor_nbr, const Tensor& z_prior,
                           const Tensor& eps, double lambda);

// Single-draw bound term w = log p_z(z) + log-lik - log q(z) and, when a
// label is given, the classification term log p(y|z) sharing the same
// posterior sample (second element null otherwise).
std::pair<NodeRef, NodeRef> elbo_and_classification(const Model& m,
                                                    const IncompleteSeries& c,
                                                    const NeighborIndex& nbr,
                                                    const Tensor& eps,
                                                    std::optional<int> label);

// Negative (ELBO + 1{label}*classification) with a shared posterior sample.
NodeRef classification_loss(const Model& m, const IncompleteSeries& c,
                            const NeighborIndex& nbr, const Tensor& eps,
                            std::optional<int> label);

// S posterior-sample imputations at the given (channel, time) queries.
// A query exactly matching an observed (channel, time) returns the original.
std::vector<std::vector<double>> impute(const Model& m, const IncompleteSeries& c,
                                        const std::vector<std::pair<std::size_t, double>>& queries,
                                        std::size_t S, Rng& rng);

struct Prediction {
    int predicted = 0;
    std::vector<double> mean_log_prob;
};

// argmax_y (1/S) sum_s log p(y|z_s); ties break toward the smallest index.
Prediction predict_label(const Model& m, const IncompleteSeries& c,
                         const NeighborIndex& nbr, std::size_t S, Rng& rng);

struct ModelError : std::runtime_error {
    explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace irts
