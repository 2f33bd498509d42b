#include "irts/models.hpp"

#include <algorithm>
#include <cmath>

namespace irts {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

Tensor randn(Rng& rng, std::vector<std::size_t> shape, double std_dev) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std_dev * rng.normal();
    return t;
}

double he_std(std::size_t fan_in) { return std::sqrt(2.0 / static_cast<double>(fan_in)); }

// Scalar Gaussian log-density terms that depend on parameters only through
// `quad` (a sum of squares node): c - 0.5 * quad / var.
NodeRef gauss_term(const NodeRef& quad, double var, double constant) {
    return ops::add_scalar(ops::scale(quad, -0.5 / var), constant);
}

}  // namespace

NodeRef ParamStore::find(const std::string& name) const {
    for (const auto& [n, p] : items)
        if (n == name) return p;
    throw ModelError("parameter not found: " + name);
}

std::vector<NodeRef> ParamStore::nodes() const {
    std::vector<NodeRef> out;
    out.reserve(items.size());
    for (const auto& [n, p] : items) out.push_back(p);
    return out;
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(items.size());
    for (const auto& [n, p] : items) out.push_back(n);
    return out;
}

std::pair<NodeRef, NodeRef> IafStage::shift_scale(const NodeRef& z) const {
    using namespace ops;
    NodeRef h = relu(add(matmul(mul(w1, mask1), z), b1));
    NodeRef shift = add(matmul(mul(w_shift, mask2), h), b_shift);
    NodeRef raw = add(matmul(mul(w_scale, mask2), h), b_scale);
    return {shift, scale(tanh(raw), 5.0)};
}

namespace {

IafStage make_iaf_stage(std::size_t d, std::size_t hidden_mult, ParamStore& store,
                        const std::string& prefix, Rng& rng) {
    std::size_t H = std::max<std::size_t>(1, hidden_mult * d);
    IafStage s;
    s.w1 = store.add(prefix + "w1", randn(rng, {H, d}, he_std(d)));
    s.b1 = store.add(prefix + "b1", Tensor::zeros({H}));
    // Zero-initialized heads make the stage an identity flow at start.
    s.w_shift = store.add(prefix + "w_shift", Tensor::zeros({d, H}));
    s.b_shift = store.add(prefix + "b_shift", Tensor::zeros({d}));
    s.w_scale = store.add(prefix + "w_scale", Tensor::zeros({d, H}));
    s.b_scale = store.add(prefix + "b_scale", Tensor::zeros({d}));

    // MADE degree masks: output i may depend only on inputs with degree < i.
    Tensor m1({H, d}), m2({d, H});
    for (std::size_t h = 0; h < H; ++h) {
        std::size_t deg_h = d >= 2 ? 1 + (h % (d - 1)) : 0;
        for (std::size_t i = 0; i < d; ++i) m1.at2(h, i) = (i + 1 <= deg_h) ? 1.0 : 0.0;
        for (std::size_t o = 0; o < d; ++o) m2.at2(o, h) = (deg_h < o + 1 && deg_h > 0) ? 1.0 : 0.0;
    }
    s.mask1 = make_const(std::move(m1), prefix + "mask1");
    s.mask2 = make_const(std::move(m2), prefix + "mask2");
    return s;
}

}  // namespace

Encoder::Encoder(const EncoderConfig& cfg, ParamStore& store, const std::string& prefix,
                 Rng& init_rng)
    : cfg_(cfg) {
    cfg_.conv.validate();
    const auto& cc = cfg_.conv;
    knots_ = store.add(prefix + "conv.knots",
                       randn(init_rng, {cc.c_in, cc.c_out, cc.knots},
                             he_std(cc.c_in * cc.knots)));
    conv_bias_ = store.add(prefix + "conv.bias", Tensor::zeros({cc.c_out}));
    if (cfg_.pool_only && cfg_.pool_layers == 0)
        throw ModelError("encoder: pool_only requires pool_layers >= 1");
    if (!cfg_.pool_only) {
        w2_ = store.add(prefix + "conv2.w",
                        randn(init_rng, {cfg_.conv2_out, cc.out_channels(), cfg_.conv2_kernel},
                              he_std(cc.out_channels() * cfg_.conv2_kernel)));
        b2_ = store.add(prefix + "conv2.b", Tensor::zeros({cfg_.conv2_out}));
    }
    for (std::size_t s = 0; s < cfg_.pool_layers; ++s) {
        std::size_t in = s == 0 ? cc.out_channels() : cfg_.pool_width;
        std::size_t kw = s == 0 ? cfg_.pool_kernel : 1;
        wp_.push_back(store.add(prefix + "pool" + std::to_string(s) + ".w",
                                randn(init_rng, {cfg_.pool_width, in, kw}, he_std(in * kw))));
        bp_.push_back(store.add(prefix + "pool" + std::to_string(s) + ".b",
                                Tensor::zeros({cfg_.pool_width})));
    }
    std::size_t flat = cfg_.pool_only ? 0 : cfg_.conv2_out * cfg_.conv2_len();
    if (cfg_.pool_layers > 0) flat += cfg_.pool_width;
    w3_ = store.add(prefix + "trunk.w", randn(init_rng, {cfg_.hidden, flat}, he_std(flat)));
    b3_ = store.add(prefix + "trunk.b", Tensor::zeros({cfg_.hidden}));
    w_mu_ = store.add(prefix + "mu.w",
                      randn(init_rng, {cfg_.latent, cfg_.hidden}, he_std(cfg_.hidden)));
    b_mu_ = store.add(prefix + "mu.b", Tensor::zeros({cfg_.latent}));
    w_lv_ = store.add(prefix + "logvar.w",
                      randn(init_rng, {cfg_.latent, cfg_.hidden}, he_std(cfg_.hidden)));
    b_lv_ = store.add(prefix + "logvar.b", Tensor::zeros({cfg_.latent}));
    for (std::size_t s = 0; s < cfg_.iaf_stages; ++s)
        iaf_.push_back(make_iaf_stage(cfg_.latent, cfg_.iaf_hidden_mult, store,
                                      prefix + "iaf" + std::to_string(s) + ".", init_rng));
    reversal_.resize(cfg_.latent);
    for (std::size_t i = 0; i < cfg_.latent; ++i) reversal_[i] = cfg_.latent - 1 - i;
}

NodeRef Encoder::features(const NodeRef& xvals, const NeighborIndex& nbr) const {
    using namespace ops;
    NodeRef v = cont_conv(cfg_.conv, knots_, conv_bias_, xvals, nbr);
    NodeRef flat;
    if (!cfg_.pool_only) {
        NodeRef a = relu(v);
        NodeRef c2 = relu(conv1d(a, w2_, b2_, cfg_.conv2_stride));
        flat = reshape(c2, {cfg_.conv2_out * cfg_.conv2_len()});
    }
    if (cfg_.pool_layers > 0) {
        NodeRef p = v;
        for (std::size_t s = 0; s < cfg_.pool_layers; ++s)
            p = relu(conv1d(p, wp_[s], bp_[s], 1));
        std::size_t len = p->value.extent(1);
        NodeRef pooled =
            matmul(p, make_const(Tensor::full({len}, 1.0 / static_cast<double>(len))));
        flat = cfg_.pool_only ? pooled : concat({flat, pooled});
    }
    return relu(dense(w3_, b3_, flat));
}

std::pair<NodeRef, NodeRef> Encoder::encode(const IncompleteSeries& c,
                                            const NeighborIndex& nbr) const {
    if (nbr.case_fingerprint != c.fingerprint())
        throw NeighborMismatchError("encode: neighbor index built for a different case");
    NodeRef h = features(make_const(nbr.values_tensor(), "obs"), nbr);
    return {ops::dense(w_mu_, b_mu_, h), ops::dense(w_lv_, b_lv_, h)};
}

PosteriorSample Encoder::sample_posterior(const NodeRef& mu, const NodeRef& logvar,
                                          const Tensor& eps, bool with_density) const {
    using namespace ops;
    std::size_t d = cfg_.latent;
    if (eps.size() != d) throw ModelError("sample_posterior: eps dimension mismatch");
    NodeRef sigma = exp(scale(logvar, 0.5));
    NodeRef z = add(mu, mul(sigma, make_const(eps, "eps")));

    NodeRef log_q;
    if (with_density) {
        double cst = -0.5 * static_cast<double>(d) * kLog2Pi;
        for (std::size_t i = 0; i < d; ++i) cst -= 0.5 * eps[i] * eps[i];
        log_q = add_scalar(scale(sum(logvar), -0.5), cst);
    }
    for (std::size_t s = 0; s < iaf_.size(); ++s) {
        if (s > 0) z = permute_vector(z, reversal_);
        auto [shift, ls] = iaf_[s].shift_scale(z);
        z = add(mul(z, exp(ls)), shift);
        if (with_density) log_q = sub(log_q, sum(ls));
    }
    return {z, log_q};
}

void DecoderConfig::validate() const {
    smoother.validate();
    if ((pre_len - 1) * deconv_stride + deconv_kernel != smoother.refs)
        throw ModelError("decoder: deconv output length does not match reference count");
}

Decoder::Decoder(const DecoderConfig& cfg, ParamStore& store, const std::string& prefix,
                 Rng& init_rng)
    : cfg_(cfg) {
    cfg_.validate();
    w1_ = store.add(prefix + "w1", randn(init_rng, {cfg_.hidden, cfg_.latent},
                                         he_std(cfg_.latent)));
    b1_ = store.add(prefix + "b1", Tensor::zeros({cfg_.hidden}));
    std::size_t pre = cfg_.pre_channels * cfg_.pre_len;
    w2_ = store.add(prefix + "w2", randn(init_rng, {pre, cfg_.hidden}, he_std(cfg_.hidden)));
    b2_ = store.add(prefix + "b2", Tensor::zeros({pre}));
    wd_ = store.add(prefix + "deconv.w",
                    randn(init_rng, {cfg_.pre_channels, cfg_.channels, cfg_.deconv_kernel},
                          he_std(cfg_.pre_channels * cfg_.deconv_kernel)));
    bd_ = store.add(prefix + "deconv.b", Tensor::zeros({cfg_.channels}));
}

NodeRef Decoder::references(const NodeRef& z) const {
    using namespace ops;
    NodeRef h = relu(dense(w1_, b1_, z));
    NodeRef u = reshape(dense(w2_, b2_, h), {cfg_.pre_channels, cfg_.pre_len});
    return conv1d_transpose(u, wd_, bd_, cfg_.deconv_stride);
}

NodeRef Decoder::decode(const NodeRef& z,
                        const std::vector<std::pair<std::size_t, double>>& queries) const {
    return kernel_smooth(cfg_.smoother, references(z), queries);
}

Classifier::Classifier(std::size_t latent, std::size_t hidden, std::size_t classes,
                       ParamStore& store, const std::string& prefix, Rng& init_rng)
    : classes_(classes) {
    w1_ = store.add(prefix + "w1", randn(init_rng, {hidden, latent}, he_std(latent)));
    b1_ = store.add(prefix + "b1", Tensor::zeros({hidden}));
    w2_ = store.add(prefix + "w2", randn(init_rng, {classes, hidden}, he_std(hidden)));
    b2_ = store.add(prefix + "b2", Tensor::zeros({classes}));
}

NodeRef Classifier::logits(const NodeRef& z) const {
    using namespace ops;
    return dense(w2_, b2_, relu(dense(w1_, b1_, z)));
}

Discriminator::Discriminator(const EncoderConfig& cfg, std::size_t z_embed,
                             ParamStore& store, const std::string& prefix, Rng& init_rng)
    : featurizer_(cfg, store, prefix + "feat.", init_rng), z_embed_(z_embed) {
    std::size_t d = cfg.latent;
    wz1_ = store.add(prefix + "z1.w", randn(init_rng, {z_embed, d}, he_std(d)));
    bz1_ = store.add(prefix + "z1.b", Tensor::zeros({z_embed}));
    wz2_ = store.add(prefix + "z2.w", randn(init_rng, {z_embed, z_embed}, he_std(z_embed)));
    bz2_ = store.add(prefix + "z2.b", Tensor::zeros({z_embed}));
    std::size_t fused = cfg.hidden + z_embed;
    wf1_ = store.add(prefix + "f1.w", randn(init_rng, {64, fused}, he_std(fused)));
    bf1_ = store.add(prefix + "f1.b", Tensor::zeros({64}));
    wf2_ = store.add(prefix + "f2.w", randn(init_rng, {1, 64}, he_std(64)));
    bf2_ = store.add(prefix + "f2.b", Tensor::zeros({1}));
}

NodeRef Discriminator::logit(const NodeRef& xvals, const NeighborIndex& nbr,
                             const NodeRef& z) const {
    using namespace ops;
    NodeRef case_embed = featurizer_.features(xvals, nbr);
    NodeRef ze = relu(dense(wz2_, bz2_, relu(dense(wz1_, bz1_, z))));
    NodeRef fused = concat({case_embed, ze});
    NodeRef out = dense(wf2_, bf2_, relu(dense(wf1_, bf1_, fused)));
    return select(out, 0);
}

Model Model::build(const ModelConfig& cfg, std::uint64_t init_seed) {
    Model m;
    m.cfg = cfg;
    Rng rng(init_seed);
    m.encoder = Encoder(cfg.encoder, m.params, "enc.", rng);
    m.decoder = Decoder(cfg.decoder, m.params, "dec.", rng);
    if (cfg.with_classifier)
        m.classifier = Classifier(cfg.encoder.latent, cfg.cls_hidden, cfg.n_classes,
                                  m.params, "cls.", rng);
    if (cfg.kind == ModelKind::pbigan)
        m.discriminator = Discriminator(cfg.encoder, cfg.disc_z_embed, m.params, "disc.", rng);
    return m;
}

std::vector<NodeRef> Model::generator_params() const {
    std::vector<NodeRef> out;
    for (const auto& [n, p] : params.items)
        if (n.rfind("disc.", 0) != 0) out.push_back(p);
    return out;
}

std::vector<NodeRef> Model::discriminator_params() const {
    std::vector<NodeRef> out;
    for (const auto& [n, p] : params.items)
        if (n.rfind("disc.", 0) == 0) out.push_back(p);
    return out;
}

void Model::zero_all_grads() const {
    for (const auto& [n, p] : params.items) p->zero_grad();
}

std::vector<std::pair<std::size_t, double>> observed_queries(const NeighborIndex& nbr) {
    std::vector<std::pair<std::size_t, double>> q;
    q.reserve(nbr.total_obs());
    for (std::size_t c = 0; c < nbr.sorted_obs.size(); ++c)
        for (const auto& o : nbr.sorted_obs[c]) q.emplace_back(c, o.time);
    return q;
}

namespace {

// log p_z(z) for the standard normal prior.
NodeRef prior_log_density(const NodeRef& z) {
    double cst = -0.5 * static_cast<double>(z->value.size()) * kLog2Pi;
    return gauss_term(ops::sum(ops::square(z)), 1.0, cst);
}

// sum_i log N(x_i | f(t_i), sigma^2); empty observation sets give a zero
// constant so degenerate cases still train.
NodeRef observation_log_lik(const Model& m, const NodeRef& z, const NeighborIndex& nbr) {
    auto queries = observed_queries(nbr);
    if (queries.empty()) return make_const(Tensor::scalar(0.0), "loglik0");
    double sigma = m.cfg.decoder.sigma;
    NodeRef f = m.decoder.decode(z, queries);
    NodeRef diff = ops::sub(make_const(nbr.values_tensor(), "obs"), f);
    double cst = -0.5 * static_cast<double>(queries.size()) *
                 (kLog2Pi + 2.0 * std::log(sigma));
    return gauss_term(ops::sum(ops::square(diff)), sigma * sigma, cst);
}

NodeRef importance_weight(const Model& m, const NodeRef& mu, const NodeRef& lv,
                          const Tensor& eps, const NeighborIndex& nbr,
                          NodeRef* z_out = nullptr) {
    PosteriorSample ps = m.encoder.sample_posterior(mu, lv, eps, true);
    if (z_out) *z_out = ps.z;
    return ops::sub(ops::add(prior_log_density(ps.z), observation_log_lik(m, ps.z, nbr)),
                    ps.log_q);
}

}  // namespace

NodeRef pvae_loss(const Model& m, const IncompleteSeries& c, const NeighborIndex& nbr,
                  const std::vector<Tensor>& eps) {
    if (eps.empty()) throw ModelError("pvae_loss: need at least one noise draw");
    auto [mu, lv] = m.encoder.encode(c, nbr);
    if (eps.size() == 1) return ops::neg(importance_weight(m, mu, lv, eps[0], nbr));
    std::vector<NodeRef> ws;
    ws.reserve(eps.size());
    for (const auto& e : eps) ws.push_back(importance_weight(m, mu, lv, e, nbr));
    NodeRef lse = ops::logsumexp(ops::stack_scalars(ws));
    return ops::neg(ops::add_scalar(lse, -std::log(static_cast<double>(eps.size()))));
}

PbiganLosses pbigan_losses(const Model& m, const IncompleteSeries& real_case,
                           const NeighborIndex& real_nbr,
                           const NeighborIndex& donor_nbr, const Tensor& z_prior,
                           const Tensor& eps, double lambda) {
    using namespace ops;
    if (!m.discriminator) throw ModelError("pbigan_losses: model has no discriminator");
    if (lambda < 0) throw ModelError("pbigan_losses: lambda must be >= 0");
    const Discriminator& disc = *m.discriminator;

    NodeRef real_x = make_const(real_nbr.values_tensor(), "real_obs");
    auto [mu, lv] = m.encoder.encode(real_case, real_nbr);
    PosteriorSample ps = m.encoder.sample_posterior(mu, lv, eps, false);

    NodeRef zp = make_const(z_prior, "z_prior");
    auto fake_queries = observed_queries(donor_nbr);
    NodeRef fake_x = fake_queries.empty()
                         ? make_const(Tensor({0}), "fake_obs")
                         : m.decoder.decode(zp, fake_queries);

    // Discriminator side: encoder/decoder outputs detached.
    NodeRef lr_d = disc.logit(real_x, real_nbr, detach(ps.z));
    NodeRef lf_d = disc.logit(detach(fake_x), donor_nbr, zp);
    NodeRef d_loss = neg(add(log_sigmoid(lr_d), log_sigmoid(neg(lf_d))));

    // Generator side: non-saturating objective; discriminator grads from this
    // root are discarded by the training loop.
    NodeRef lr_g = disc.logit(real_x, real_nbr, ps.z);
    NodeRef lf_g = disc.logit(fake_x, donor_nbr, zp);
    NodeRef g_loss = neg(add(log_sigmoid(lf_g), log_sigmoid(neg(lr_g))));

    NodeRef ae;
    if (lambda > 0) {
        auto real_queries = observed_queries(real_nbr);
        if (!real_queries.empty()) {
            NodeRef rec = m.decoder.decode(ps.z, real_queries);
            ae = sum(square(sub(real_x, rec)));
            g_loss = add(g_loss, scale(ae, lambda));
        }
    }
    return {d_loss, g_loss, ae};
}

std::pair<NodeRef, NodeRef> elbo_and_classification(const Model& m,
                                                    const IncompleteSeries& c,
                                                    const NeighborIndex& nbr,
                                                    const Tensor& eps,
                                                    std::optional<int> label) {
    auto [mu, lv] = m.encoder.encode(c, nbr);
    NodeRef z;
    NodeRef w = importance_weight(m, mu, lv, eps, nbr, &z);
    NodeRef cls;
    if (label) {
        if (!m.classifier)
            throw ModelError("classification term requested without a classifier");
        if (*label < 0 || static_cast<std::size_t>(*label) >= m.classifier->n_classes())
            throw ModelError("label " + std::to_string(*label) + " out of range");
        cls = ops::select(ops::log_softmax(m.classifier->logits(z)),
                          static_cast<std::size_t>(*label));
    }
    return {w, cls};
}

NodeRef classification_loss(const Model& m, const IncompleteSeries& c,
                            const NeighborIndex& nbr, const Tensor& eps,
                            std::optional<int> label) {
    if (!m.classifier) throw ModelError("classification_loss: model has no classifier");
    auto [w, cls] = elbo_and_classification(m, c, nbr, eps, label);
    return cls ? ops::neg(ops::add(w, cls)) : ops::neg(w);
}

std::vector<std::vector<double>> impute(
    const Model& m, const IncompleteSeries& c,
    const std::vector<std::pair<std::size_t, double>>& queries, std::size_t S,
    Rng& rng) {
    if (S < 1) throw ModelError("impute: need S >= 1");
    NeighborIndex nbr = build_conv_neighbors(c, m.cfg.encoder.conv);
    auto [mu, lv] = m.encoder.encode(c, nbr);
    std::size_t d = m.cfg.encoder.latent;
    std::vector<std::vector<double>> out(S);
    for (std::size_t s = 0; s < S; ++s) {
        Tensor eps({d});
        for (std::size_t i = 0; i < d; ++i) eps[i] = rng.normal();
        PosteriorSample ps = m.encoder.sample_posterior(mu, lv, eps, false);
        out[s].resize(queries.size());
        if (!queries.empty()) {
            NodeRef f = m.decoder.decode(ps.z, queries);
            for (std::size_t q = 0; q < queries.size(); ++q) out[s][q] = f->value[q];
        }
        // Observed entries are kept intact when queried at observed times.
        for (std::size_t q = 0; q < queries.size(); ++q) {
            auto [ch, t] = queries[q];
            if (ch >= c.channels.size()) continue;
            for (const auto& o : c.channels[ch])
                if (o.time == t) {
                    out[s][q] = o.value;
                    break;
                }
        }
    }
    return out;
}

Prediction predict_label(const Model& m, const IncompleteSeries& c,
                         const NeighborIndex& nbr, std::size_t S, Rng& rng) {
    if (!m.classifier) throw ModelError("predict_label: model has no classifier");
    if (S < 1) throw ModelError("predict_label: need S >= 1");
    auto [mu, lv] = m.encoder.encode(c, nbr);
    std::size_t d = m.cfg.encoder.latent;
    std::size_t nc = m.classifier->n_classes();
    Prediction pred;
    pred.mean_log_prob.assign(nc, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        Tensor eps({d});
        for (std::size_t i = 0; i < d; ++i) eps[i] = rng.normal();
        PosteriorSample ps = m.encoder.sample_posterior(mu, lv, eps, false);
        NodeRef lp = ops::log_softmax(m.classifier->logits(ps.z));
        for (std::size_t y = 0; y < nc; ++y) pred.mean_log_prob[y] += lp->value[y];
    }
    for (auto& v : pred.mean_log_prob) v /= static_cast<double>(S);
    pred.predicted = 0;
    for (std::size_t y = 1; y < nc; ++y)
        if (pred.mean_log_prob[y] > pred.mean_log_prob[pred.predicted])
            pred.predicted = static_cast<int>(y);  // ties keep the smaller index
    return pred;
}

}  // namespace irts
