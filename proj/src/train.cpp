#include "irts/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace irts {

using nlohmann::json;

void TrainConfig::validate() const {
    if (epochs < 0 || batch < 1) throw std::invalid_argument("train: bad epochs/batch");
    if (lr <= 0 || lr_disc <= 0) throw std::invalid_argument("train: learning rates must be > 0");
    if (k_importance < 1) throw std::invalid_argument("train: K must be >= 1");
    if (lambda < 0) throw std::invalid_argument("train: lambda must be >= 0");
    if (sigma <= 0) throw std::invalid_argument("train: sigma must be > 0");
    if (latent < 1) throw std::invalid_argument("train: latent dim must be >= 1");
    if (disc_steps < 1) throw std::invalid_argument("train: disc_steps must be >= 1");
    if (dec_refs % 8 != 0) throw std::invalid_argument("train: dec_refs must be divisible by 8");
    if (enc_pool_layers > 0 && enc_pool_width < 1)
        throw std::invalid_argument("train: enc_pool_width must be >= 1");
    if (enc_pool_layers > 0 && (enc_pool_kernel < 1 || enc_pool_kernel > enc_grid))
        throw std::invalid_argument("train: enc_pool_kernel must be in [1, enc_grid]");
    if (enc_pool_only && enc_pool_layers == 0)
        throw std::invalid_argument("train: enc_pool_only requires enc_pool_layers >= 1");
    if (holdout <= 0 || holdout >= 1) throw std::invalid_argument("train: holdout in (0,1)");
}

ModelConfig TrainConfig::model_config() const {
    validate();
    ModelConfig mc;
    mc.kind = kind;
    mc.encoder.conv.c_in = channels;
    mc.encoder.conv.c_out = enc_cout;
    mc.encoder.conv.grid = enc_grid;
    mc.encoder.conv.width = enc_width > 0 ? enc_width : 2.0 / static_cast<double>(enc_grid);
    mc.encoder.conv.knots = enc_knots;
    mc.encoder.conv2_out = enc_conv2_out;
    mc.encoder.conv2_kernel = enc_conv2_kernel;
    mc.encoder.conv2_stride = enc_conv2_stride;
    mc.encoder.hidden = enc_hidden;
    mc.encoder.pool_layers = enc_pool_layers;
    mc.encoder.pool_width = enc_pool_width;
    mc.encoder.pool_kernel = enc_pool_kernel;
    mc.encoder.pool_only = enc_pool_only;
    mc.encoder.conv.normalize = enc_normalize;
    mc.encoder.latent = static_cast<std::size_t>(latent);
    mc.encoder.iaf_stages = iaf_stages;
    mc.decoder.latent = static_cast<std::size_t>(latent);
    mc.decoder.hidden = dec_hidden;
    mc.decoder.channels = channels;
    mc.decoder.smoother.refs = dec_refs;
    mc.decoder.smoother.bandwidth =
        dec_bandwidth > 0 ? dec_bandwidth : 3.0 / static_cast<double>(dec_refs);
    mc.decoder.pre_channels = dec_pre_channels;
    mc.decoder.pre_len = dec_refs / 8;
    mc.decoder.deconv_kernel = 8;
    mc.decoder.deconv_stride = 8;
    mc.decoder.sigma = sigma;
    mc.with_classifier = classifier;
    mc.n_classes = static_cast<std::size_t>(n_classes);
    return mc;
}

std::string TrainConfig::to_json() const {
    json j = {{"model", kind == ModelKind::pvae ? "pvae" : "pbigan"},
              {"epochs", epochs},
              {"batch", batch},
              {"lr", lr},
              {"lr_disc", lr_disc},
              {"k_importance", k_importance},
              {"lambda", lambda},
              {"sigma", sigma},
              {"latent", latent},
              {"seed", seed},
              {"eval_every", eval_every},
              {"classifier", classifier},
              {"n_classes", n_classes},
              {"holdout", holdout},
              {"disc_steps", disc_steps},
              {"threads", threads},
              {"channels", channels},
              {"enc_cout", enc_cout},
              {"enc_grid", enc_grid},
              {"enc_knots", enc_knots},
              {"enc_width", enc_width},
              {"enc_conv2_out", enc_conv2_out},
              {"enc_conv2_kernel", enc_conv2_kernel},
              {"enc_conv2_stride", enc_conv2_stride},
              {"enc_hidden", enc_hidden},
              {"enc_pool_layers", enc_pool_layers},
              {"enc_pool_width", enc_pool_width},
              {"enc_pool_kernel", enc_pool_kernel},
              {"enc_pool_only", enc_pool_only},
              {"enc_normalize", enc_normalize},
              {"iaf_stages", iaf_stages},
              {"dec_refs", dec_refs},
              {"dec_bandwidth", dec_bandwidth},
              {"dec_hidden", dec_hidden},
              {"dec_pre_channels", dec_pre_channels}};
    return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& s) {
    json j = json::parse(s);
    TrainConfig c;
    std::string kind = j.value("model", "pvae");
    if (kind != "pvae" && kind != "pbigan")
        throw std::invalid_argument("train config: unknown model kind " + kind);
    c.kind = kind == "pvae" ? ModelKind::pvae : ModelKind::pbigan;
    c.epochs = j.value("epochs", c.epochs);
    c.batch = j.value("batch", c.batch);
    c.lr = j.value("lr", c.lr);
    c.lr_disc = j.value("lr_disc", c.lr_disc);
    c.k_importance = j.value("k_importance", c.k_importance);
    c.lambda = j.value("lambda", c.lambda);
    c.sigma = j.value("sigma", c.sigma);
    c.latent = j.value("latent", c.latent);
    c.seed = j.value("seed", c.seed);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.classifier = j.value("classifier", c.classifier);
    c.n_classes = j.value("n_classes", c.n_classes);
    c.holdout = j.value("holdout", c.holdout);
    c.disc_steps = j.value("disc_steps", c.disc_steps);
    c.threads = j.value("threads", c.threads);
    c.channels = j.value("channels", c.channels);
    c.enc_cout = j.value("enc_cout", c.enc_cout);
    c.enc_grid = j.value("enc_grid", c.enc_grid);
    c.enc_knots = j.value("enc_knots", c.enc_knots);
    c.enc_width = j.value("enc_width", c.enc_width);
    c.enc_conv2_out = j.value("enc_conv2_out", c.enc_conv2_out);
    c.enc_conv2_kernel = j.value("enc_conv2_kernel", c.enc_conv2_kernel);
    c.enc_conv2_stride = j.value("enc_conv2_stride", c.enc_conv2_stride);
    c.enc_hidden = j.value("enc_hidden", c.enc_hidden);
    c.enc_pool_layers = j.value("enc_pool_layers", c.enc_pool_layers);
    c.enc_pool_width = j.value("enc_pool_width", c.enc_pool_width);
    c.enc_pool_kernel = j.value("enc_pool_kernel", c.enc_pool_kernel);
    c.enc_pool_only = j.value("enc_pool_only", c.enc_pool_only);
    c.enc_normalize = j.value("enc_normalize", c.enc_normalize);
    c.iaf_stages = j.value("iaf_stages", c.iaf_stages);
    c.dec_refs = j.value("dec_refs", c.dec_refs);
    c.dec_bandwidth = j.value("dec_bandwidth", c.dec_bandwidth);
    c.dec_hidden = j.value("dec_hidden", c.dec_hidden);
    c.dec_pre_channels = j.value("dec_pre_channels", c.dec_pre_channels);
    c.validate();
    return c;
}

namespace {

std::string fmt_opt(const std::optional<double>& v) {
    if (!v) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", *v);
    return buf;
}

}  // namespace

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::ostringstream os;
    os << "epoch,step,loss_total,loss_elbo,loss_d,loss_g,loss_ae,loss_cls,rmse,auc,seconds\n";
    for (const auto& r : rows)
        os << r.epoch << ',' << r.step << ',' << fmt_opt(r.loss_total) << ','
           << fmt_opt(r.loss_elbo) << ',' << fmt_opt(r.loss_d) << ',' << fmt_opt(r.loss_g)
           << ',' << fmt_opt(r.loss_ae) << ',' << fmt_opt(r.loss_cls) << ','
           << fmt_opt(r.rmse) << ',' << fmt_opt(r.auc) << ',' << fmt_opt(r.seconds)
           << '\n';
    return os.str();
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write metrics to " + path);
    os << metrics_csv(rows);
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("auc: scores/labels size mismatch");
    std::size_t pos = 0, neg = 0;
    for (int l : labels) (l ? pos : neg)++;
    if (pos == 0 || neg == 0) throw std::invalid_argument("auc: need both classes");
    double s = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            if (scores[i] > scores[j]) s += 1.0;
            else if (scores[i] == scores[j]) s += 0.5;
        }
    }
    return s / (static_cast<double>(pos) * static_cast<double>(neg));
}

ImputationEval evaluate_imputation(const Model& m, const Dataset& data,
                                   double holdout_fraction, Rng& rng) {
    if (holdout_fraction <= 0 || holdout_fraction >= 1)
        throw std::invalid_argument("evaluate_imputation: fraction in (0,1)");
    std::size_t n = data.size();
    std::vector<double> sq(n, 0), base_sq(n, 0);
    std::vector<std::size_t> cnt(n, 0);
    std::vector<std::uint8_t> skipped(n, 0);
    std::uint64_t eval_seed = rng.next_u64();
    Rng base_rng(eval_seed);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(num_threads()) if (num_threads() > 1)
#endif
    for (long long ci = 0; ci < static_cast<long long>(n); ++ci) {
        Rng crng = base_rng.derived(static_cast<std::uint64_t>(ci));
        const IncompleteSeries& full = data.cases[ci];
        IncompleteSeries context;
        context.channels.resize(full.channels.size());
        std::vector<std::pair<std::size_t, double>> held_q;
        std::vector<double> held_v;
        for (std::size_t ch = 0; ch < full.channels.size(); ++ch) {
            const auto& obs = full.channels[ch];
            if (obs.size() < 2) {
                context.channels[ch] = obs;
                continue;
            }
            std::size_t k = static_cast<std::size_t>(
                std::lround(holdout_fraction * static_cast<double>(obs.size())));
            k = std::max<std::size_t>(1, std::min(k, obs.size() - 1));
            std::vector<std::size_t> idx(obs.size());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            for (std::size_t i = 0; i < k; ++i)
                std::swap(idx[i], idx[i + crng.uniform_int(static_cast<int>(idx.size() - i))]);
            std::vector<std::uint8_t> held(obs.size(), 0);
            for (std::size_t i = 0; i < k; ++i) held[idx[i]] = 1;
            for (std::size_t i = 0; i < obs.size(); ++i) {
                if (held[i]) {
                    held_q.emplace_back(ch, obs[i].time);
                    held_v.push_back(obs[i].value);
                } else {
                    context.channels[ch].push_back(obs[i]);
                }
            }
        }
        if (held_q.empty()) {
            skipped[ci] = 1;
            continue;
        }
        auto imps = impute(m, context, held_q, 1, crng);
        for (std::size_t q = 0; q < held_q.size(); ++q) {
            double e = imps[0][q] - held_v[q];
            sq[ci] += e * e;
            base_sq[ci] += held_v[q] * held_v[q];
        }
        cnt[ci] = held_q.size();
    }

    ImputationEval ev;
    double s = 0, bs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (skipped[i]) {
            ev.skipped++;
            continue;
        }
        ev.evaluated++;
        ev.held_out += cnt[i];
        s += sq[i];
        bs += base_sq[i];
    }
    if (ev.held_out) {
        ev.rmse = std::sqrt(s / static_cast<double>(ev.held_out));
        ev.baseline_rmse = std::sqrt(bs / static_cast<double>(ev.held_out));
    }
    return ev;
}

namespace {

Tensor draw_normal(Rng& rng, std::size_t d) {
    Tensor t({d});
    for (std::size_t i = 0; i < d; ++i) t[i] = rng.normal();
    return t;
}

void check_finite(double v, const char* what) {
    if (!std::isfinite(v))
        throw DivergenceError(std::string("training diverged: non-finite ") + what);
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i + 1 < n; ++i)
        std::swap(idx[i], idx[i + rng.uniform_int(static_cast<int>(n - i))]);
    return idx;
}

}  // namespace

Trainer::Trainer(const TrainConfig& cfg)
    : cfg_(cfg),
      model_(Model::build(cfg.model_config(), cfg.seed)),
      rng_(cfg.seed ^ 0x7261696e5f726e67ULL) {
    set_threads(cfg_.threads);
    adam_gen_ = Adam(model_.generator_params(), {cfg_.lr, 0.9, 0.999, 1e-8});
    adam_disc_ = Adam(model_.discriminator_params(), {cfg_.lr_disc, 0.9, 0.999, 1e-8});
}

Trainer::Trainer(const TrainConfig& cfg, const Checkpoint& ckpt) : Trainer(cfg) {
    if (ckpt.config_digest != fnv1a(cfg.to_json()))
        throw CheckpointError("checkpoint was produced with a different configuration");
    for (auto& [name, p] : model_.params.items) {
        const Tensor* t = ckpt.find(name);
        if (!t) throw CheckpointError("checkpoint missing parameter " + name);
        if (!t->same_shape(p->value)) throw CheckpointError("shape mismatch for " + name);
        p->value = *t;
    }
    auto load_adam = [&](Adam& a, const std::string& prefix,
                         const std::vector<NodeRef>& params) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            const std::string& pname = params[i]->op_name;
            const Tensor* tm = ckpt.find(prefix + ".m." + pname);
            const Tensor* tv = ckpt.find(prefix + ".v." + pname);
            if (!tm || !tv) throw CheckpointError("checkpoint missing optimizer state");
            a.moments_m()[i] = *tm;
            a.moments_v()[i] = *tv;
        }
        if (const Tensor* ts = ckpt.find(prefix + ".t"))
            a.set_step_count(static_cast<std::int64_t>((*ts)[0]));
    };
    load_adam(adam_gen_, "adam_gen", adam_gen_.params());
    if (!adam_disc_.params().empty()) load_adam(adam_disc_, "adam_disc", adam_disc_.params());
    rng_.restore(ckpt.rng_state);
    step_ = ckpt.step;
    epoch_ = ckpt.epoch;
}

Checkpoint Trainer::make_checkpoint() const {
    Checkpoint c;
    c.model_kind = cfg_.kind == ModelKind::pvae ? "pvae" : "pbigan";
    c.config_json = cfg_.to_json();
    c.config_digest = fnv1a(c.config_json);
    c.step = step_;
    c.epoch = epoch_;
    c.rng_state = rng_.state();
    for (const auto& [name, p] : model_.params.items) c.tensors.emplace_back(name, p->value);
    auto dump_adam = [&](const Adam& a, const std::string& prefix) {
        const auto& params = a.params();
        auto& m = const_cast<Adam&>(a).moments_m();
        auto& v = const_cast<Adam&>(a).moments_v();
        for (std::size_t i = 0; i < params.size(); ++i) {
            c.tensors.emplace_back(prefix + ".m." + params[i]->op_name, m[i]);
            c.tensors.emplace_back(prefix + ".v." + params[i]->op_name, v[i]);
        }
        c.tensors.emplace_back(prefix + ".t",
                               Tensor::scalar(static_cast<Real>(a.step_count())));
    };
    dump_adam(adam_gen_, "adam_gen");
    if (!adam_disc_.params().empty()) dump_adam(adam_disc_, "adam_disc");
    return c;
}

void Trainer::train_epoch_pvae(const Dataset& train_set, MetricsRow& agg) {
    std::size_t d = model_.cfg.encoder.latent;
    auto order = shuffled_indices(train_set.size(), rng_);
    double total = 0, elbo = 0, cls_sum = 0;
    std::size_t count = 0, cls_count = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg_.batch)) {
        std::size_t bend = std::min(order.size(), start + cfg_.batch);
        std::size_t bsz = bend - start;
        std::vector<NeighborIndex> nbrs;
        nbrs.reserve(bsz);
        std::vector<NodeRef> case_losses, ws, clss;
        for (std::size_t bi = start; bi < bend; ++bi) {
            const IncompleteSeries& c = train_set.cases[order[bi]];
            nbrs.push_back(build_conv_neighbors(c, model_.cfg.encoder.conv));
            if (cfg_.classifier) {
                Tensor eps = draw_normal(rng_, d);
                auto [w, cls] = elbo_and_classification(model_, c, nbrs.back(), eps,
                                                        c.label);
                ws.push_back(w);
                NodeRef loss = cls ? ops::neg(ops::add(w, cls)) : ops::neg(w);
                if (cls) clss.push_back(cls);
                case_losses.push_back(loss);
            } else {
                std::vector<Tensor> eps;
                for (int k = 0; k < cfg_.k_importance; ++k)
                    eps.push_back(draw_normal(rng_, d));
                case_losses.push_back(pvae_loss(model_, c, nbrs.back(), eps));
            }
        }
        std::vector<Real> weights(case_losses.size(), 1.0 / static_cast<Real>(bsz));
        NodeRef batch_loss = ops::add_weighted(case_losses, weights);
        check_finite(batch_loss->value[0], "loss");
        backward(batch_loss);
        adam_gen_.step();
        ++step_;
        total += batch_loss->value[0] * static_cast<double>(bsz);
        count += bsz;
        if (cfg_.classifier) {
            for (const auto& w : ws) elbo += -w->value[0];
            for (const auto& cl : clss) {
                cls_sum += -cl->value[0];
                ++cls_count;
            }
        } else {
            elbo += batch_loss->value[0] * static_cast<double>(bsz);
        }
    }
    if (count) {
        agg.loss_total = total / static_cast<double>(count);
        agg.loss_elbo = elbo / static_cast<double>(count);
        if (cls_count) agg.loss_cls = cls_sum / static_cast<double>(cls_count);
    }
}

void Trainer::train_epoch_pbigan(const Dataset& train_set, MetricsRow& agg) {
    std::size_t d = model_.cfg.encoder.latent;
    auto order = shuffled_indices(train_set.size(), rng_);
    auto donors = shuffled_indices(train_set.size(), rng_);
    double dsum = 0, gsum = 0, aesum = 0;
    std::size_t count = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg_.batch)) {
        std::size_t bend = std::min(order.size(), start + cfg_.batch);
        std::size_t bsz = bend - start;
        // Draws are fixed per minibatch; the discriminator step and the
        // generator step each rebuild the graph so the generator sees the
        // updated discriminator.
        std::vector<Tensor> eps, zp;
        std::vector<NeighborIndex> nbrs, donor_nbrs;
        for (std::size_t bi = start; bi < bend; ++bi) {
            eps.push_back(draw_normal(rng_, d));
            zp.push_back(draw_normal(rng_, d));
            nbrs.push_back(build_conv_neighbors(train_set.cases[order[bi]],
                                                model_.cfg.encoder.conv));
            donor_nbrs.push_back(build_conv_neighbors(train_set.cases[donors[bi]],
                                                      model_.cfg.encoder.conv));
        }
        std::vector<Real> weights(bsz, 1.0 / static_cast<Real>(bsz));
        auto build = [&](std::size_t i) {
            return pbigan_losses(model_, train_set.cases[order[start + i]], nbrs[i],
                                 donor_nbrs[i], zp[i], eps[i], cfg_.lambda);
        };
        for (int ds = 0; ds < cfg_.disc_steps; ++ds) {
            std::vector<NodeRef> d_losses;
            for (std::size_t i = 0; i < bsz; ++i) d_losses.push_back(build(i).d_loss);
            NodeRef d_batch = ops::add_weighted(d_losses, weights);
            check_finite(d_batch->value[0], "discriminator loss");
            backward(d_batch);
            adam_disc_.step();
            if (ds == cfg_.disc_steps - 1) dsum += d_batch->value[0] * static_cast<double>(bsz);
        }
        std::vector<NodeRef> g_losses, ae_terms;
        for (std::size_t i = 0; i < bsz; ++i) {
            PbiganLosses pl = build(i);
            g_losses.push_back(pl.g_loss);
            if (pl.ae_term) ae_terms.push_back(pl.ae_term);
        }
        NodeRef g_batch = ops::add_weighted(g_losses, weights);
        check_finite(g_batch->value[0], "generator loss");
        backward(g_batch);
        adam_gen_.step();
        // The generator graph also reaches discriminator leaves; discard.
        for (const auto& p : model_.discriminator_params()) p->zero_grad();
        ++step_;
        gsum += g_batch->value[0] * static_cast<double>(bsz);
        for (const auto& ae : ae_terms) aesum += ae->value[0];
        count += bsz;
    }
    if (count) {
        agg.loss_d = dsum / static_cast<double>(count);
        agg.loss_g = gsum / static_cast<double>(count);
        agg.loss_ae = cfg_.lambda > 0 ? aesum / static_cast<double>(count) : 0.0;
        agg.loss_total = agg.loss_g;
    }
}

MetricsRow Trainer::evaluate(const Dataset& valid_set, double seconds) {
    MetricsRow row;
    row.epoch = epoch_;
    row.step = step_;
    if (last_train_agg_) {
        row.loss_total = last_train_agg_->loss_total;
        row.loss_elbo = last_train_agg_->loss_elbo;
        row.loss_d = last_train_agg_->loss_d;
        row.loss_g = last_train_agg_->loss_g;
        row.loss_ae = last_train_agg_->loss_ae;
        row.loss_cls = last_train_agg_->loss_cls;
    }
    Rng eval_rng(cfg_.seed ^ 0x6576616cULL ^ (static_cast<std::uint64_t>(epoch_) << 20));
    if (valid_set.size()) {
        ImputationEval ev = evaluate_imputation(model_, valid_set, cfg_.holdout, eval_rng);
        if (ev.held_out) row.rmse = ev.rmse;
        if (cfg_.classifier) {
            std::vector<double> scores;
            std::vector<int> labels;
            for (const auto& c : valid_set.cases) {
                if (!c.label) continue;
                NeighborIndex nbr = build_conv_neighbors(c, model_.cfg.encoder.conv);
                Prediction p = predict_label(model_, c, nbr, 1, eval_rng);
                scores.push_back(p.mean_log_prob.size() > 1 ? p.mean_log_prob[1] : 0.0);
                labels.push_back(*c.label ? 1 : 0);
            }
            bool both = false;
            if (!labels.empty()) {
                int first = labels[0];
                for (int l : labels)
                    if (l != first) both = true;
            }
            if (both) row.auc = auc(scores, labels);
        }
    }
    // With one worker the CSV is part of the reproducibility contract, so
    // wall-clock time is only reported for parallel runs.
    if (cfg_.threads != 1) row.seconds = seconds;
    return row;
}

std::vector<MetricsRow> Trainer::run(const Dataset& train_set, const Dataset& valid_set,
                                     int epochs) {
    if (train_set.size() == 0) throw std::invalid_argument("train: empty training set");
    set_threads(cfg_.threads);
    std::vector<MetricsRow> rows;
    if (step_ == 0 && epoch_ == 0) {
        last_train_agg_.reset();
        rows.push_back(evaluate(valid_set, 0.0));
    }
    for (int e = 0; e < epochs; ++e) {
        auto t0 = std::chrono::steady_clock::now();
        MetricsRow agg;
        if (cfg_.kind == ModelKind::pvae)
            train_epoch_pvae(train_set, agg);
        else
            train_epoch_pbigan(train_set, agg);
        ++epoch_;
        last_train_agg_ = agg;
        if (epoch_ % cfg_.eval_every == 0 || e == epochs - 1) {
            double secs = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
            rows.push_back(evaluate(valid_set, secs));
        }
    }
    return rows;
}

std::pair<Checkpoint, std::vector<MetricsRow>> train(const TrainConfig& cfg,
                                                     const Dataset& train_set,
                                                     const Dataset& valid_set) {
    cfg.validate();
    if (train_set.meta.channels != cfg.channels)
        throw std::invalid_argument("train: dataset channel count does not match config");
    Trainer tr(cfg);
    auto rows = tr.run(train_set, valid_set, cfg.epochs);
    return {tr.make_checkpoint(), std::move(rows)};
}

}  // namespace irts
