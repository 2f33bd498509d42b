#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "irts/synthetic.hpp"
#include "irts/train.hpp"

using namespace irts;

namespace {

TrainConfig tiny_train(ModelKind kind) {
    TrainConfig cfg;
    cfg.kind = kind;
    cfg.epochs = 2;
    cfg.batch = 8;
    cfg.latent = 4;
    cfg.enc_cout = 6;
    cfg.enc_grid = 17;
    cfg.enc_knots = 3;
    cfg.enc_conv2_out = 4;
    cfg.enc_conv2_kernel = 3;
    cfg.enc_conv2_stride = 2;
    cfg.enc_hidden = 8;
    cfg.iaf_stages = 1;
    cfg.dec_refs = 16;
    cfg.dec_hidden = 8;
    cfg.dec_pre_channels = 2;
    return cfg;
}

Dataset small_synth(std::size_t n, std::uint64_t seed) {
    GeneratorConfig g;
    g.n_cases = n;
    g.seed = seed;
    return generate_dataset(g);
}

bool rows_equal(const MetricsRow& a, const MetricsRow& b) {
    return a.epoch == b.epoch && a.step == b.step && a.loss_total == b.loss_total &&
           a.loss_elbo == b.loss_elbo && a.loss_d == b.loss_d && a.loss_g == b.loss_g &&
           a.loss_ae == b.loss_ae && a.loss_cls == b.loss_cls && a.rmse == b.rmse &&
           a.auc == b.auc && a.seconds == b.seconds;
}

std::string tmp_file(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("metrics csv: header and empty fields") {
    MetricsRow r;
    r.epoch = 3;
    r.step = 42;
    r.loss_total = 1.5;
    r.rmse = 0.25;
    auto csv = metrics_csv({r});
    CHECK(csv ==
          "epoch,step,loss_total,loss_elbo,loss_d,loss_g,loss_ae,loss_cls,rmse,auc,seconds\n"
          "3,42,1.5,,,,,,0.25,,\n");
    // Full 17-digit precision for non-terminating decimals.
    MetricsRow r2;
    r2.loss_total = 1.0 / 3.0;
    CHECK(metrics_csv({r2}).find("0.33333333333333331") != std::string::npos);
}

TEST_CASE("auc: pinned examples") {
    CHECK(auc({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}) == 1.0);
    CHECK(auc({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}) == 0.5);
    CHECK(auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) == 0.75);
    CHECK_THROWS_AS(auc({0.1, 0.2}, {1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(auc({0.1}, {1, 0}), std::invalid_argument);
}

TEST_CASE("auc: brute-force oracle and monotone-transform invariance") {
    Rng rng(5);
    for (int rep = 0; rep < 30; ++rep) {
        std::size_t n = 4 + static_cast<std::size_t>(rng.uniform_int(20));
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            // Quantized scores so ties actually occur.
            scores[i] = std::floor(rng.uniform() * 8.0) / 8.0;
            labels[i] = rng.uniform() < 0.5 ? 0 : 1;
        }
        labels[0] = 0;
        labels[1] = 1;
        double direct = 0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (!(labels[i] == 1 && labels[j] == 0)) continue;
                ++pairs;
                if (scores[i] > scores[j]) direct += 1.0;
                if (scores[i] == scores[j]) direct += 0.5;
            }
        direct /= static_cast<double>(pairs);
        double got = auc(scores, labels);
        CHECK(got == doctest::Approx(direct).epsilon(1e-15));

        std::vector<double> warped(n);
        for (std::size_t i = 0; i < n; ++i) warped[i] = std::exp(3.0 * scores[i]) - 2.0;
        CHECK(auc(warped, labels) == got);
    }
}

TEST_CASE("evaluate_imputation: a zeroed decoder matches the zero baseline") {
    TrainConfig cfg = tiny_train(ModelKind::pvae);
    Model m = Model::build(cfg.model_config(), 1);
    for (const char* name : {"dec.deconv.w", "dec.deconv.b"}) {
        auto p = m.params.find(name);
        for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] = 0.0;
    }
    Dataset d = small_synth(30, 3);
    Rng rng(4);
    ImputationEval ev = evaluate_imputation(m, d, 0.3, rng);
    CHECK(ev.evaluated + ev.skipped == d.size());
    CHECK(ev.held_out > 0);
    CHECK(ev.rmse == ev.baseline_rmse);
    CHECK(ev.rmse > 0);
}

TEST_CASE("evaluate_imputation skips cases with too few observations") {
    TrainConfig cfg = tiny_train(ModelKind::pvae);
    Model m = Model::build(cfg.model_config(), 1);
    Dataset d;
    d.meta.channels = 3;
    IncompleteSeries sparse;
    sparse.channels.resize(3);
    sparse.channels[0].push_back({0.5, 1.0});  // single observation, no channel >= 2
    d.cases.push_back(sparse);
    IncompleteSeries ok;
    ok.channels.resize(3);
    for (int i = 0; i < 4; ++i)
        ok.channels[1].push_back({0.2 + 0.1 * i, 0.5});
    d.cases.push_back(ok);
    Rng rng(6);
    ImputationEval ev = evaluate_imputation(m, d, 0.3, rng);
    CHECK(ev.skipped == 1);
    CHECK(ev.evaluated == 1);
}

TEST_CASE("training for zero epochs leaves the model at initialization") {
    TrainConfig cfg = tiny_train(ModelKind::pvae);
    cfg.epochs = 0;
    cfg.seed = 9;
    Dataset tr = small_synth(16, 10), va = small_synth(8, 11);
    auto [ckpt, rows] = train(cfg, tr, va);
    CHECK(rows.size() == 1);  // the initial evaluation only
    CHECK(rows[0].epoch == 0);
    CHECK(rows[0].step == 0);
    CHECK(!rows[0].loss_total);
    CHECK(ckpt.step == 0);

    Model fresh = Model::build(cfg.model_config(), cfg.seed);
    for (const auto& [name, p] : fresh.params.items) {
        const Tensor* t = ckpt.find(name);
        REQUIRE(t);
        for (std::size_t i = 0; i < p->value.size(); ++i) CHECK((*t)[i] == p->value[i]);
    }
}

TEST_CASE("same seed gives identical metric logs") {
    TrainConfig cfg = tiny_train(ModelKind::pvae);
    cfg.epochs = 2;
    cfg.seed = 12;
    Dataset tr = small_synth(16, 13), va = small_synth(8, 14);
    auto [c1, r1] = train(cfg, tr, va);
    auto [c2, r2] = train(cfg, tr, va);
    CHECK(metrics_csv(r1) == metrics_csv(r2));
    REQUIRE(c1.tensors.size() == c2.tensors.size());
    for (std::size_t i = 0; i < c1.tensors.size(); ++i) {
        CHECK(c1.tensors[i].first == c2.tensors[i].first);
        const Tensor& a = c1.tensors[i].second;
        const Tensor& b = c2.tensors[i].second;
        REQUIRE(a.size() == b.size());
        for (std::size_t j = 0; j < a.size(); ++j) CHECK(a[j] == b[j]);
    }
}

TEST_CASE("metric rows are monotone in (epoch, step)") {
    TrainConfig cfg = tiny_train(ModelKind::pvae);
    cfg.epochs = 3;
    cfg.seed = 15;
    Dataset tr = small_synth(12, 16), va = small_synth(6, 17);
    auto [ckpt, rows] = train(cfg, tr, va);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].epoch > rows[i - 1].epoch);
        CHECK(rows[i].step >= rows[i - 1].step);
    }
}

TEST_CASE("checkpoint file round-trips exactly") {
    TrainConfig cfg = tiny_train(ModelKind::pvae);
    cfg.epochs = 1;
    cfg.seed = 18;
    Dataset tr = small_synth(12, 19), va = small_synth(4, 20);
    auto [ckpt, rows] = train(cfg, tr, va);
    auto path = tmp_file("irts_ckpt.bin");
    save_checkpoint(ckpt, path);
    Checkpoint back = load_checkpoint(path);
    CHECK(back.schema_version == ckpt.schema_version);
    CHECK(back.model_kind == ckpt.model_kind);
    CHECK(back.config_json == ckpt.config_json);
    CHECK(back.config_digest == ckpt.config_digest);
    CHECK(back.step == ckpt.step);
    CHECK(back.epoch == ckpt.epoch);
    CHECK(back.rng_state == ckpt.rng_state);
    REQUIRE(back.tensors.size() == ckpt.tensors.size());
    for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) {
        CHECK(back.tensors[i].first == ckpt.tensors[i].first);
        const Tensor& a = ckpt.tensors[i].second;
        const Tensor& b = back.tensors[i].second;
        REQUIRE(a.same_shape(b));
        for (std::size_t j = 0; j < a.size(); ++j) CHECK(a[j] == b[j]);
    }
    std::remove(path.c_str());
}

TEST_CASE("save, load, resume matches uninterrupted training bit-exactly") {
    TrainConfig cfg = tiny_train(ModelKind::pvae);
    cfg.seed = 21;
    Dataset tr = small_synth(16, 22), va = small_synth(8, 23);

    Trainer straight(cfg);
    auto rows_all = straight.run(tr, va, 4);

    Trainer first(cfg);
    first.run(tr, va, 2);
    auto path = tmp_file("irts_resume.bin");
    save_checkpoint(first.make_checkpoint(), path);
    Trainer resumed(cfg, load_checkpoint(path));
    auto rows_tail = resumed.run(tr, va, 2);
    std::remove(path.c_str());

    // Final parameters identical to the uninterrupted run.
    for (std::size_t i = 0; i < straight.model().params.items.size(); ++i) {
        const Tensor& a = straight.model().params.items[i].second->value;
        const Tensor& b = resumed.model().params.items[i].second->value;
        for (std::size_t j = 0; j < a.size(); ++j) CHECK(a[j] == b[j]);
    }
    // Post-resume metric rows equal the tail of the uninterrupted log.
    REQUIRE(rows_all.size() == 5);  // initial + 4 epochs
    REQUIRE(rows_tail.size() == 2);
    CHECK(rows_equal(rows_tail[0], rows_all[3]));
    CHECK(rows_equal(rows_tail[1], rows_all[4]));
}

TEST_CASE("resume rejects a checkpoint from a different configuration") {
    TrainConfig cfg = tiny_train(ModelKind::pvae);
    cfg.seed = 24;
    Dataset tr = small_synth(8, 25), va = small_synth(4, 26);
    Trainer t(cfg);
    t.run(tr, va, 1);
    Checkpoint ckpt = t.make_checkpoint();
    TrainConfig other = cfg;
    other.lr = 5e-4;
    CHECK_THROWS_AS(Trainer(other, ckpt), CheckpointError);
}

TEST_CASE("adversarial training: one epoch and the lambda switch") {
    TrainConfig cfg = tiny_train(ModelKind::pbigan);
    cfg.epochs = 1;
    cfg.seed = 27;
    cfg.lambda = 0.0;
    Dataset tr = small_synth(16, 28), va = small_synth(6, 29);
    auto [c0, r0] = train(cfg, tr, va);
    REQUIRE(r0.size() == 2);
    REQUIRE(r0[1].loss_d);
    REQUIRE(r0[1].loss_g);
    CHECK(*r0[1].loss_ae == 0.0);

    cfg.lambda = 1.0;
    auto [c1, r1] = train(cfg, tr, va);
    CHECK(*r1[1].loss_ae > 0.0);
}

TEST_CASE("training aborts with a diagnostic when the loss blows up") {
    TrainConfig cfg = tiny_train(ModelKind::pvae);
    cfg.epochs = 50;
    cfg.seed = 30;
    cfg.lr = 1e18;  // guarantees numeric overflow within a few steps
    Dataset tr = small_synth(12, 31), va;
    va.meta.channels = 3;
    CHECK_THROWS_AS(train(cfg, tr, va), DivergenceError);
}

TEST_CASE("training loss drops over a few epochs on synthetic data") {
    TrainConfig cfg = tiny_train(ModelKind::pvae);
    cfg.epochs = 5;
    cfg.seed = 32;
    Dataset tr = small_synth(32, 33), va;
    va.meta.channels = 3;
    auto [ckpt, rows] = train(cfg, tr, va);
    REQUIRE(rows.size() == 6);
    REQUIRE(rows[1].loss_total);
    REQUIRE(rows[5].loss_total);
    CHECK(*rows[5].loss_total < *rows[1].loss_total);
}

TEST_CASE("train config JSON round-trip") {
    TrainConfig cfg = tiny_train(ModelKind::pbigan);
    cfg.lambda = 0.25;
    cfg.seed = 77;
    cfg.k_importance = 8;
    cfg.classifier = true;
    TrainConfig back = TrainConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());
    CHECK(back.kind == ModelKind::pbigan);
    CHECK(back.lambda == 0.25);
    CHECK(back.seed == 77);
    CHECK(back.k_importance == 8);
    CHECK(back.classifier);
    CHECK_THROWS_AS(TrainConfig::from_json("{\"model\":\"other\"}"),
                    std::invalid_argument);
}

TEST_CASE("train validates its configuration") {
    TrainConfig cfg = tiny_train(ModelKind::pvae);
    cfg.dec_refs = 20;  // not a multiple of 8
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    TrainConfig cfg2 = tiny_train(ModelKind::pvae);
    cfg2.k_importance = 0;
    CHECK_THROWS_AS(cfg2.validate(), std::invalid_argument);
    TrainConfig cfg3 = tiny_train(ModelKind::pvae);
    Dataset d = small_synth(4, 1);
    d.meta.channels = 2;
    Dataset va;
    CHECK_THROWS_AS(train(cfg3, d, va), std::invalid_argument);
}
