// Command-line front end: dataset generation, training, imputation,
// classification, and the gradient check suite.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "irts/gradcheck.hpp"
#include "irts/synthetic.hpp"
#include "irts/train.hpp"

using namespace irts;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 1 check failure, 2 usage, 3 divergence,
// 4 capability mismatch.
enum ExitCode { kOk = 0, kCheckFailure = 1, kUsage = 2, kDivergence = 3, kCapability = 4 };

std::string timestamp_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Reproducibility record for one command. Written with status "running"
// before the work starts and finalized afterwards; timestamps are the only
// fields excluded from the byte-identical-rerun guarantee.
struct RunManifest {
    std::string command;
    json config;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::string path;
    std::string started_at;

    void begin() {
        started_at = timestamp_now();
        write("running", "");
    }
    void finish() { write("completed", timestamp_now()); }

    void write(const std::string& status, const std::string& finished) const {
        if (path.empty()) return;
        json j = {{"command", command}, {"config", config},     {"seed", seed},
                  {"version", kVersion}, {"inputs", inputs},    {"outputs", outputs},
                  {"status", status},    {"started_at", started_at}};
        if (!finished.empty()) j["finished_at"] = finished;
        std::ofstream os(path);
        if (!os) throw std::runtime_error("cannot write manifest to " + path);
        os << j.dump(2) << "\n";
    }
};

Model model_from_checkpoint(const Checkpoint& ckpt, TrainConfig& cfg_out) {
    cfg_out = TrainConfig::from_json(ckpt.config_json);
    Model m = Model::build(cfg_out.model_config(), cfg_out.seed);
    for (auto& [name, p] : m.params.items) {
        const Tensor* t = ckpt.find(name);
        if (!t) throw CheckpointError("checkpoint missing parameter " + name);
        if (!t->same_shape(p->value))
            throw CheckpointError("checkpoint shape mismatch for " + name);
        p->value = *t;
    }
    return m;
}

// Overrides cfg fields for every train flag the user actually passed, so the
// precedence is defaults < config file < command line.
struct TrainFlags {
    std::string model, data, valid, config, out_ckpt = "model.ckpt",
                              out_metrics = "metrics.csv", manifest;
    int epochs = 0, batch = 0, k = 0, latent = 0, eval_every = 0, disc_steps = 0,
        threads = 0, n_classes = 0;
    double lr = 0, lr_disc = 0, lambda = 0, sigma = 0, holdout = 0;
    std::uint64_t seed = 0;
    bool classifier = false;
};

int run_generate(const std::string& out, long long n, std::uint64_t seed, double rate,
                 double window, double noise, bool labeled, int threads,
                 const std::string& manifest_path) {
    GeneratorConfig g;
    g.n_cases = static_cast<std::size_t>(n);
    g.seed = seed;
    g.rate = rate;
    g.window = window;
    g.noise_std = noise;
    g.labeled = labeled;
    g.validate();
    set_threads(threads);

    RunManifest man;
    man.command = "generate";
    man.config = {{"n", n},         {"seed", seed},   {"rate", rate},
                  {"window", window}, {"noise", noise}, {"labeled", labeled}};
    man.seed = seed;
    man.outputs = {out};
    man.path = manifest_path.empty() ? out + ".manifest.json" : manifest_path;
    man.begin();

    Dataset d = generate_dataset(g);
    save_dataset(d, out);
    man.finish();
    std::cout << "wrote " << d.size() << " cases to " << out << "\n";
    return kOk;
}

int run_train(const TrainFlags& f, const CLI::App* cmd) {
    TrainConfig cfg;
    if (!f.config.empty()) {
        std::ifstream is(f.config);
        if (!is) throw std::runtime_error("cannot read config file " + f.config);
        std::stringstream ss;
        ss << is.rdbuf();
        cfg = TrainConfig::from_json(ss.str());
    }
    auto given = [&](const std::string& name) { return cmd->count(name) > 0; };
    if (given("--model")) {
        if (f.model != "pvae" && f.model != "pbigan")
            throw CLI::ValidationError("--model must be pvae or pbigan");
        cfg.kind = f.model == "pvae" ? ModelKind::pvae : ModelKind::pbigan;
    }
    if (given("--epochs")) cfg.epochs = f.epochs;
    if (given("--batch")) cfg.batch = f.batch;
    if (given("--lr")) cfg.lr = f.lr;
    if (given("--lr-disc")) cfg.lr_disc = f.lr_disc;
    if (given("--k")) cfg.k_importance = f.k;
    if (given("--lambda")) cfg.lambda = f.lambda;
    if (given("--sigma")) cfg.sigma = f.sigma;
    if (given("--latent")) cfg.latent = f.latent;
    if (given("--seed")) cfg.seed = f.seed;
    if (given("--eval-every")) cfg.eval_every = f.eval_every;
    if (given("--classifier")) cfg.classifier = true;
    if (given("--n-classes")) cfg.n_classes = f.n_classes;
    if (given("--holdout")) cfg.holdout = f.holdout;
    if (given("--disc-steps")) cfg.disc_steps = f.disc_steps;
    if (given("--threads")) cfg.threads = f.threads;

    Dataset train_set = load_dataset(f.data);
    cfg.channels = train_set.meta.channels;
    Dataset valid_set;
    valid_set.meta.channels = cfg.channels;
    if (!f.valid.empty()) valid_set = load_dataset(f.valid);
    cfg.validate();

    RunManifest man;
    man.command = "train";
    man.config = json::parse(cfg.to_json());
    man.seed = cfg.seed;
    man.inputs = {f.data};
    if (!f.valid.empty()) man.inputs.push_back(f.valid);
    man.outputs = {f.out_ckpt, f.out_metrics};
    man.path = f.manifest.empty() ? f.out_ckpt + ".manifest.json" : f.manifest;
    man.begin();

    auto [ckpt, rows] = train(cfg, train_set, valid_set);
    save_checkpoint(ckpt, f.out_ckpt);
    write_metrics_csv(rows, f.out_metrics);
    man.finish();
    if (!rows.empty() && rows.back().rmse)
        std::cout << "final rmse " << *rows.back().rmse << "\n";
    std::cout << "wrote " << f.out_ckpt << " and " << f.out_metrics << "\n";
    return kOk;
}

int run_impute(const std::string& ckpt_path, const std::string& data_path,
               std::vector<long long> case_ids, long long samples, long long grid,
               std::uint64_t seed, const std::string& out,
               const std::string& manifest_path) {
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    TrainConfig cfg;
    Model m = model_from_checkpoint(ckpt, cfg);
    Dataset d = load_dataset(data_path);
    if (samples < 1) throw CLI::ValidationError("--samples must be >= 1");
    if (grid < 2) throw CLI::ValidationError("--grid must be >= 2");
    if (case_ids.empty()) case_ids.push_back(0);
    for (long long id : case_ids)
        if (id < 0 || static_cast<std::size_t>(id) >= d.size())
            throw std::out_of_range("case index " + std::to_string(id) +
                                    " out of range (dataset has " +
                                    std::to_string(d.size()) + " cases)");

    RunManifest man;
    man.command = "impute";
    man.config = {{"cases", case_ids}, {"samples", samples}, {"grid", grid},
                  {"seed", seed}};
    man.seed = seed;
    man.inputs = {ckpt_path, data_path};
    man.outputs = {out};
    man.path = manifest_path.empty() ? out + ".manifest.json" : manifest_path;
    man.begin();

    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write " + out);
    os.precision(17);
    Rng rng(seed);
    std::size_t C = m.cfg.decoder.channels;
    for (long long id : case_ids) {
        const IncompleteSeries& c = d.cases[static_cast<std::size_t>(id)];
        for (std::size_t ch = 0; ch < C; ++ch) {
            json times = json::array(), values = json::array();
            for (const auto& o : c.channels[ch]) {
                times.push_back(o.time);
                values.push_back(o.value);
            }
            json rec = {{"case", id},     {"type", "observations"}, {"channel", ch},
                        {"times", times}, {"values", values}};
            os << rec.dump() << "\n";
        }
        std::vector<std::pair<std::size_t, double>> queries;
        std::vector<double> grid_times(static_cast<std::size_t>(grid));
        for (std::size_t i = 0; i < grid_times.size(); ++i)
            grid_times[i] = static_cast<double>(i) / static_cast<double>(grid - 1);
        for (std::size_t ch = 0; ch < C; ++ch)
            for (double t : grid_times) queries.emplace_back(ch, t);
        auto imps = impute(m, c, queries, static_cast<std::size_t>(samples), rng);
        for (std::size_t s = 0; s < imps.size(); ++s)
            for (std::size_t ch = 0; ch < C; ++ch) {
                json values = json::array();
                for (std::size_t i = 0; i < grid_times.size(); ++i)
                    values.push_back(imps[s][ch * grid_times.size() + i]);
                json rec = {{"case", id},        {"type", "trajectory"},
                            {"sample", s},       {"channel", ch},
                            {"times", grid_times}, {"values", values}};
                os << rec.dump() << "\n";
            }
    }
    man.finish();
    std::cout << "wrote trajectories for " << case_ids.size() << " case(s) to " << out
              << "\n";
    return kOk;
}

int run_classify(const std::string& ckpt_path, const std::string& data_path,
                 long long samples, std::uint64_t seed, const std::string& out,
                 const std::string& manifest_path) {
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    TrainConfig cfg;
    Model m = model_from_checkpoint(ckpt, cfg);
    if (!m.classifier) {
        std::cerr << "error: checkpoint " << ckpt_path << " has no classifier head\n";
        return kCapability;
    }
    Dataset d = load_dataset(data_path);
    std::size_t labeled = 0;
    for (const auto& c : d.cases) labeled += c.label.has_value() ? 1 : 0;
    if (labeled == 0)
        throw std::runtime_error("dataset " + data_path +
                                 " has no labels; classification needs labeled cases");

    RunManifest man;
    man.command = "classify";
    man.config = {{"samples", samples}, {"seed", seed}};
    man.seed = seed;
    man.inputs = {ckpt_path, data_path};
    man.outputs = {out};
    man.path = manifest_path.empty() ? out + ".manifest.json" : manifest_path;
    man.begin();

    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write " + out);
    std::size_t nc = m.classifier->n_classes();
    os << "case,label,predicted";
    for (std::size_t y = 0; y < nc; ++y) os << ",logp" << y;
    os << "\n";
    Rng rng(seed);
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto& c = d.cases[i];
        NeighborIndex nbr = build_conv_neighbors(c, m.cfg.encoder.conv);
        Prediction p =
            predict_label(m, c, nbr, static_cast<std::size_t>(samples), rng);
        os << i << ',' << (c.label ? std::to_string(*c.label) : std::string()) << ','
           << p.predicted;
        char buf[32];
        for (std::size_t y = 0; y < nc; ++y) {
            std::snprintf(buf, sizeof buf, "%.17g", p.mean_log_prob[y]);
            os << ',' << buf;
        }
        os << "\n";
        if (c.label && nc == 2) {
            scores.push_back(p.mean_log_prob[1]);
            labels.push_back(*c.label ? 1 : 0);
        }
    }
    bool both = false;
    for (std::size_t i = 1; i < labels.size(); ++i)
        if (labels[i] != labels[0]) both = true;
    if (both) {
        double a = auc(scores, labels);
        man.config["auc"] = a;
        std::cout << "auc " << a << "\n";
    }
    man.finish();
    std::cout << "wrote predictions to " << out << "\n";
    return kOk;
}

// The gradient-check suite: every registered operation plus the three
// training objectives on tiny random models.
int run_gradcheck(const std::string& only, double tol, double step) {
    struct Check {
        std::string name;
        GradCheckReport report;
    };
    std::vector<Check> results;
    auto run_one = [&](const std::string& name, auto&& fn) {
        if (!only.empty() && name.find(only) == std::string::npos) return;
        results.push_back({name, fn()});
    };

    Rng rng(2024);
    auto rand_t = [&](std::vector<std::size_t> shape, double sd = 0.7) {
        Tensor t(std::move(shape));
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = sd * rng.normal() + 0.05;
        return t;
    };

    run_one("elementwise", [&] {
        auto a = make_param(rand_t({8}));
        return grad_check(
            [&] {
                using namespace ops;
                auto u = add(mul(a, a), exp(scale(a, 0.3)));
                u = add(u, div(sigmoid(a), add_scalar(square(tanh(a)), 1.5)));
                u = add(u, add(softplus(a), log(add_scalar(square(a), 1.0))));
                u = add(u, add(relu(add_scalar(a, 0.2)), log_sigmoid(a)));
                return sum(u);
            },
            {a}, {"a"}, step, tol);
    });
    run_one("matmul_dense", [&] {
        auto w = make_param(rand_t({5, 7}));
        auto b = make_param(rand_t({5}));
        auto x = make_param(rand_t({7}));
        return grad_check(
            [&] { return ops::sum(ops::square(ops::dense(w, b, x))); },
            {w, b, x}, {"w", "b", "x"}, step, tol);
    });
    run_one("reductions", [&] {
        auto a = make_param(rand_t({3, 4}));
        return grad_check(
            [&] {
                using namespace ops;
                auto v = reshape(a, {12});
                return add(add(mean(a), logsumexp(v)),
                           add(sum(log_softmax(v)), select(v, 3)));
            },
            {a}, {"a"}, step, tol);
    });
    run_one("conv1d", [&] {
        auto x = make_param(rand_t({2, 9}));
        auto w = make_param(rand_t({3, 2, 3}));
        auto b = make_param(rand_t({3}));
        return grad_check(
            [&] { return ops::sum(ops::square(ops::conv1d(x, w, b, 2))); },
            {x, w, b}, {"x", "w", "b"}, step, tol);
    });
    run_one("conv1d_transpose", [&] {
        auto x = make_param(rand_t({3, 4}));
        auto w = make_param(rand_t({3, 2, 4}));
        auto b = make_param(rand_t({2}));
        return grad_check(
            [&] { return ops::sum(ops::square(ops::conv1d_transpose(x, w, b, 2))); },
            {x, w, b}, {"x", "w", "b"}, step, tol);
    });
    run_one("cont_conv", [&] {
        ContConvConfig cc{2, 3, 9, 0.3, 4};
        IncompleteSeries c;
        c.channels.resize(2);
        for (auto& ch : c.channels)
            for (int i = 0; i < 5; ++i) ch.push_back({rng.uniform(), rng.normal()});
        static NeighborIndex nbr;  // must outlive the graphs built below
        nbr = build_conv_neighbors(c, cc);
        auto knots = make_param(rand_t({2, 3, 4}));
        auto biases = make_param(rand_t({3}));
        auto xvals = make_param(nbr.values_tensor());
        return grad_check(
            [&] {
                return ops::sum(ops::square(cont_conv(cc, knots, biases, xvals, nbr)));
            },
            {knots, biases, xvals}, {"knots", "biases", "xvals"}, step, tol);
    });
    run_one("kernel_smooth", [&] {
        KernelSmootherConfig ks{12, 0.15};
        auto refs = make_param(rand_t({2, 12}));
        std::vector<std::pair<std::size_t, double>> queries{
            {0, 0.05}, {0, 0.61}, {1, 0.33}, {1, 0.98}};
        return grad_check(
            [&] { return ops::sum(ops::square(kernel_smooth(ks, refs, queries))); },
            {refs}, {"refs"}, step, tol);
    });

    auto tiny_model = [](ModelKind kind, bool cls, std::uint64_t init_seed,
                         Rng& jit) {
        ModelConfig mc;
        mc.kind = kind;
        mc.with_classifier = cls;
        mc.encoder.conv = {2, 4, 9, 0.3, 3};
        mc.encoder.conv2_out = 3;
        mc.encoder.conv2_kernel = 3;
        mc.encoder.conv2_stride = 2;
        mc.encoder.hidden = 6;
        mc.encoder.latent = 3;
        mc.encoder.iaf_stages = 2;
        mc.encoder.iaf_hidden_mult = 2;
        mc.decoder.latent = 3;
        mc.decoder.hidden = 6;
        mc.decoder.channels = 2;
        mc.decoder.smoother = {16, 0.2};
        mc.decoder.pre_channels = 2;
        mc.decoder.pre_len = 4;
        mc.decoder.deconv_kernel = 4;
        mc.decoder.deconv_stride = 4;
        mc.cls_hidden = 5;
        mc.disc_z_embed = 4;
        Model m = Model::build(mc, init_seed);
        // Keep relu inputs off their kinks: zero-initialized biases would
        // otherwise put empty grid regions exactly at 0.
        for (const auto& [n, p] : m.params.items)
            for (std::size_t i = 0; i < p->value.size(); ++i)
                p->value[i] += 0.05 * jit.normal();
        return m;
    };
    auto tiny_case = [](Rng& r) {
        IncompleteSeries c;
        c.channels.resize(2);
        for (auto& ch : c.channels)
            for (int i = 0; i < 4; ++i) ch.push_back({r.uniform(), r.normal()});
        return c;
    };

    run_one("pvae_loss", [&] {
        Rng local(24);
        static Model m = tiny_model(ModelKind::pvae, false, 23, local);
        auto c = tiny_case(local);
        c.channels[0].push_back({0.3, 0.4});
        static NeighborIndex nbr;
        nbr = build_conv_neighbors(c, m.cfg.encoder.conv);
        Tensor e0(std::vector<std::size_t>{3}), e1(std::vector<std::size_t>{3});
        for (std::size_t i = 0; i < 3; ++i) e0[i] = local.normal();
        for (std::size_t i = 0; i < 3; ++i) e1[i] = local.normal();
        std::vector<Tensor> eps{e0, e1};
        return grad_check([&, c] { return pvae_loss(m, c, nbr, eps); },
                          m.params.nodes(), m.params.names(), step, tol);
    });
    run_one("pbigan_losses", [&] {
        Rng local(32);
        static Model m = tiny_model(ModelKind::pbigan, false, 31, local);
        auto real = tiny_case(local);
        auto donor = tiny_case(local);
        static NeighborIndex rn, dn;
        rn = build_conv_neighbors(real, m.cfg.encoder.conv);
        dn = build_conv_neighbors(donor, m.cfg.encoder.conv);
        Tensor zp(std::vector<std::size_t>{3}), eps(std::vector<std::size_t>{3});
        for (std::size_t i = 0; i < 3; ++i) zp[i] = local.normal();
        for (std::size_t i = 0; i < 3; ++i) eps[i] = local.normal();
        std::vector<NodeRef> disc_p = m.discriminator_params();
        std::vector<NodeRef> gen_p = m.generator_params();
        std::vector<std::string> disc_n, gen_n;
        for (const auto& [n, p] : m.params.items)
            (n.rfind("disc.", 0) == 0 ? disc_n : gen_n).push_back(n);
        auto rd = grad_check(
            [&, real, donor] {
                return pbigan_losses(m, real, rn, dn, zp, eps, 1.0).d_loss;
            },
            disc_p, disc_n, step, tol);
        auto rg = grad_check(
            [&, real, donor] {
                return pbigan_losses(m, real, rn, dn, zp, eps, 1.0).g_loss;
            },
            gen_p, gen_n, step, tol);
        GradCheckReport merged = rd;
        merged.passed = rd.passed && rg.passed;
        if (rg.max_rel_err > merged.max_rel_err) {
            merged.max_rel_err = rg.max_rel_err;
            merged.worst_param = rg.worst_param;
        }
        for (const auto& e : rg.entries) merged.entries.push_back(e);
        return merged;
    });
    run_one("classification_loss", [&] {
        Rng local(58);
        static Model m = tiny_model(ModelKind::pvae, true, 57, local);
        auto c = tiny_case(local);
        c.label = 1;
        static NeighborIndex nbr;
        nbr = build_conv_neighbors(c, m.cfg.encoder.conv);
        Tensor eps(std::vector<std::size_t>{3});
        for (std::size_t i = 0; i < 3; ++i) eps[i] = local.normal();
        return grad_check(
            [&, c] { return classification_loss(m, c, nbr, eps, c.label); },
            m.params.nodes(), m.params.names(), step, tol);
    });

    if (results.empty()) {
        std::cerr << "no checks match filter '" << only << "'\n";
        return kUsage;
    }
    bool all_ok = true;
    for (const auto& r : results) {
        std::printf("%-22s %s  max rel err %.3g", r.name.c_str(),
                    r.report.passed ? "PASS" : "FAIL", r.report.max_rel_err);
        if (!r.report.passed) std::printf("  worst %s", r.report.worst_param.c_str());
        std::printf("\n");
        all_ok = all_ok && r.report.passed;
    }
    if (!all_ok) {
        const GradCheckReport* worst = nullptr;
        for (const auto& r : results)
            if (!r.report.passed && (!worst || r.report.max_rel_err > worst->max_rel_err))
                worst = &r.report;
        std::fprintf(stderr, "gradient check failed; worst offender %s (rel err %.3g)\n",
                     worst->worst_param.c_str(), worst->max_rel_err);
        return kCheckFailure;
    }
    std::printf("all gradient checks passed\n");
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* p = std::getenv("IRTS_PRECISION")) {
        std::string mode(p);
        if (mode == "f32")
            set_precision(Precision::f32);
        else if (mode == "f64")
            set_precision(Precision::f64);
        else {
            std::cerr << "error: IRTS_PRECISION must be f32 or f64, got '" << mode << "'\n";
            return kUsage;
        }
    }

    CLI::App app{"Incomplete time series toolkit"};
    app.require_subcommand(1);

    // generate
    long long gen_n = 1000;
    std::uint64_t gen_seed = 0;
    double gen_rate = 30.0, gen_window = 0.25, gen_noise = 0.01;
    bool gen_labeled = false;
    int gen_threads = 1;
    std::string gen_out = "dataset.jsonl", gen_manifest;
    auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset");
    gen->add_option("--n", gen_n, "number of cases")->check(CLI::NonNegativeNumber);
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--rate", gen_rate, "Poisson rate");
    gen->add_option("--window", gen_window, "observation window length");
    gen->add_option("--noise", gen_noise, "observation noise std");
    gen->add_flag("--labeled", gen_labeled, "two-frequency labeled variant");
    gen->add_option("--threads", gen_threads, "worker threads");
    gen->add_option("--out", gen_out, "output JSONL path");
    gen->add_option("--manifest", gen_manifest, "manifest path");

    // train
    TrainFlags tf;
    auto* tr = app.add_subcommand("train", "Train a model");
    tr->add_option("--model", tf.model, "pvae or pbigan");
    tr->add_option("--data", tf.data, "training dataset")->required();
    tr->add_option("--valid", tf.valid, "validation dataset");
    tr->add_option("--config", tf.config, "JSON config file");
    tr->add_option("--epochs", tf.epochs, "training epochs");
    tr->add_option("--batch", tf.batch, "minibatch size");
    tr->add_option("--lr", tf.lr, "learning rate");
    tr->add_option("--lr-disc", tf.lr_disc, "discriminator learning rate");
    tr->add_option("--k", tf.k, "importance samples");
    tr->add_option("--lambda", tf.lambda, "autoencoding weight");
    tr->add_option("--sigma", tf.sigma, "observation noise std");
    tr->add_option("--latent", tf.latent, "latent dimension");
    tr->add_option("--seed", tf.seed, "training seed");
    tr->add_option("--eval-every", tf.eval_every, "epochs between evaluations");
    tr->add_flag("--classifier", tf.classifier, "train a joint classifier");
    tr->add_option("--n-classes", tf.n_classes, "number of classes");
    tr->add_option("--holdout", tf.holdout, "imputation holdout fraction");
    tr->add_option("--disc-steps", tf.disc_steps, "discriminator steps per generator step");
    tr->add_option("--threads", tf.threads, "worker threads");
    tr->add_option("--out-ckpt", tf.out_ckpt, "checkpoint output path");
    tr->add_option("--out-metrics", tf.out_metrics, "metrics CSV output path");
    tr->add_option("--manifest", tf.manifest, "manifest path");

    // impute
    std::string imp_ckpt, imp_data, imp_out = "trajectories.jsonl", imp_manifest;
    std::vector<long long> imp_cases;
    long long imp_samples = 1, imp_grid = 200;
    std::uint64_t imp_seed = 0;
    auto* im = app.add_subcommand("impute", "Impute dense trajectories");
    im->add_option("--ckpt", imp_ckpt, "checkpoint path")->required();
    im->add_option("--data", imp_data, "dataset path")->required();
    im->add_option("--case", imp_cases, "case indices (repeatable)");
    im->add_option("--samples", imp_samples, "posterior samples");
    im->add_option("--grid", imp_grid, "dense grid size");
    im->add_option("--seed", imp_seed, "sampling seed");
    im->add_option("--out", imp_out, "output JSONL path");
    im->add_option("--manifest", imp_manifest, "manifest path");

    // classify
    std::string cls_ckpt, cls_data, cls_out = "predictions.csv", cls_manifest;
    long long cls_samples = 1;
    std::uint64_t cls_seed = 0;
    auto* cl = app.add_subcommand("classify", "Predict labels and report AUC");
    cl->add_option("--ckpt", cls_ckpt, "checkpoint path")->required();
    cl->add_option("--data", cls_data, "labeled dataset path")->required();
    cl->add_option("--samples", cls_samples, "posterior samples");
    cl->add_option("--seed", cls_seed, "sampling seed");
    cl->add_option("--out", cls_out, "predictions CSV path");
    cl->add_option("--manifest", cls_manifest, "manifest path");

    // gradcheck
    std::string gc_op;
    double gc_tol = 1e-4, gc_step = 1e-5;
    auto* gc = app.add_subcommand("gradcheck", "Run the gradient check suite");
    gc->add_option("--op", gc_op, "only run checks whose name contains this string");
    gc->add_option("--tol", gc_tol, "relative tolerance");
    gc->add_option("--step", gc_step, "finite-difference step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*gen)
            return run_generate(gen_out, gen_n, gen_seed, gen_rate, gen_window, gen_noise,
                                gen_labeled, gen_threads, gen_manifest);
        if (*tr) return run_train(tf, tr);
        if (*im)
            return run_impute(imp_ckpt, imp_data, imp_cases, imp_samples, imp_grid,
                              imp_seed, imp_out, imp_manifest);
        if (*cl)
            return run_classify(cls_ckpt, cls_data, cls_samples, cls_seed, cls_out,
                                cls_manifest);
        if (*gc) return run_gradcheck(gc_op, gc_tol, gc_step);
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
