#pragma once

#include <optional>

#include "irts/adam.hpp"
#include "irts/checkpoint.hpp"
#include "irts/models.hpp"

namespace irts {

struct TrainConfig {
    ModelKind kind = ModelKind::pvae;
    int epochs = 20;
    int batch = 32;
    double lr = 1e-3;
    double lr_disc = 2e-4;
    int k_importance = 1;    // IWAE samples (P-VAE)
    double lambda = 1.0;     // autoencoding weight (P-BiGAN)
    double sigma = 0.1;      // observation noise std
    int latent = 16;
    std::uint64_t seed = 0;
    int eval_every = 1;      // epochs between evaluations
    bool classifier = false;
    int n_classes = 2;
    double holdout = 0.3;    // held-out fraction for imputation evaluation
    int disc_steps = 1;      // discriminator steps per generator step
    int threads = 1;
    std::size_t channels = 3;

    // Encoder architecture. enc_width <= 0 selects 2/grid.
    std::size_t enc_cout = 24;
    std::size_t enc_grid = 49;
    std::size_t enc_knots = 7;
    double enc_width = -1;
    std::size_t enc_conv2_out = 24;
    std::size_t enc_conv2_kernel = 5;
    std::size_t enc_conv2_stride = 2;
    std::size_t enc_hidden = 64;
    std::size_t enc_pool_layers = 0;
    std::size_t enc_pool_width = 32;
    std::size_t enc_pool_kernel = 1;
    bool enc_pool_only = false;
    bool enc_normalize = false;
    std::size_t iaf_stages = 2;

    // Decoder architecture. refs must be divisible by 8 (deconv upsampling);
    // dec_bandwidth <= 0 selects 3/refs.
    std::size_t dec_refs = 128;
    double dec_bandwidth = -1;
    std::size_t dec_hidden = 64;
    std::size_t dec_pre_channels = 8;

    void validate() const;
    ModelConfig model_config() const;
    std::string to_json() const;
    static TrainConfig from_json(const std::string& s);
};

struct MetricsRow {
    std::int64_t epoch = 0;
    std::int64_t step = 0;
    std::optional<double> loss_total, loss_elbo, loss_d, loss_g, loss_ae, loss_cls;
    std::optional<double> rmse, auc, seconds;
};

// Fixed-header CSV; empty fields for inapplicable columns.
std::string metrics_csv(const std::vector<MetricsRow>& rows);
void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path);

struct ImputationEval {
    double rmse = 0;             // model RMSE on held-out observations
    double baseline_rmse = 0;    // zero-predictor RMSE on the same holdout
    std::size_t evaluated = 0;   // cases contributing
    std::size_t skipped = 0;     // cases with no channel of >= 2 observations
    std::size_t held_out = 0;    // total held-out observations
};

// Per case: hold out the given fraction of observations per channel (channels
// with < 2 observations are not evaluated), encode from the rest, impute the
// held-out times with S=1.
ImputationEval evaluate_imputation(const Model& m, const Dataset& data,
                                  double holdout_fraction, Rng& rng);

// Mann-Whitney AUC: P(score+ > score-) + P(tie)/2. Both classes required.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Minibatch training driver. Holds the model, optimizer states and shuffling
// RNG; checkpoint() captures enough to resume bit-exactly.
class Trainer {
public:
    explicit Trainer(const TrainConfig& cfg);
    Trainer(const TrainConfig& cfg, const Checkpoint& ckpt);

    // Trains for `epochs` epochs, appending one metrics row per evaluation
    // event (plus the initial evaluation when starting from scratch).
    std::vector<MetricsRow> run(const Dataset& train_set, const Dataset& valid_set,
                                int epochs);

    Checkpoint make_checkpoint() const;
    Model& model() { return model_; }
    const Model& model() const { return model_; }
    std::int64_t step() const { return step_; }
    std::int64_t epoch() const { return epoch_; }

private:
    void train_epoch_pvae(const Dataset& train_set, MetricsRow& agg);
    void train_epoch_pbigan(const Dataset& train_set, MetricsRow& agg);
    MetricsRow evaluate(const Dataset& valid_set, double train_loss_seconds);

    TrainConfig cfg_;
    Model model_;
    Adam adam_gen_, adam_disc_;
    Rng rng_;
    std::int64_t step_ = 0;
    std::int64_t epoch_ = 0;
    std::optional<MetricsRow> last_train_agg_;
};

// One-shot: fresh model, cfg.epochs epochs, final checkpoint and metric log.
std::pair<Checkpoint, std::vector<MetricsRow>> train(const TrainConfig& cfg,
                                                     const Dataset& train_set,
                                                     const Dataset& valid_set);

}  // namespace irts
