#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "support.hpp"
#include "vab/metrics.hpp"
#include "vab/trainer.hpp"

namespace fs = std::filesystem;
using test_support::sample_bmm;
using test_support::scratch_dir;
using test_support::separated_means3;
using vab::Rng;
using vab::Tensor;
using vab::TrainConfig;
using vab::VabParams;

namespace {

TrainConfig bmm_config() {
    TrainConfig cfg;
    cfg.dim_z = 6;
    cfg.num_clusters = 3;
    cfg.hidden = {64};
    cfg.input_dim = 16;
    cfg.epochs = 40;
    cfg.pretrain_epochs = 10;
    cfg.batch_size = 50;
    cfg.pad = false;
    cfg.pixels_per_image = 16;
    cfg.eval_every = 0;
    return cfg;
}

} // namespace

TEST_CASE("learning rate schedule") {
    TrainConfig cfg;
    CHECK(vab::learning_rate(cfg, 0) == 0.001);
    CHECK(vab::learning_rate(cfg, 9) == 0.001);
    CHECK(vab::learning_rate(cfg, 10) == Catch::Approx(0.0009).epsilon(1e-12));
    CHECK(vab::learning_rate(cfg, 200) == 0.0002);

    double prev = cfg.lr0;
    for (std::size_t e = 0; e < 400; ++e) {
        double lr = vab::learning_rate(cfg, e);
        CHECK(lr <= prev);
        CHECK(lr >= cfg.lr_min);
        CHECK(lr <= cfg.lr0);
        prev = lr;
    }
}

TEST_CASE("temperature schedule anneals to the floor") {
    TrainConfig cfg;
    CHECK(vab::temperature(cfg, 0) == 1.0);
    CHECK(vab::temperature(cfg, 1) == Catch::Approx(0.97).epsilon(1e-12));
    CHECK(vab::temperature(cfg, 1000) == 0.3);

    cfg.tau_anneal = 1.0;
    CHECK(vab::temperature(cfg, 500) == 1.0); // fixed-tau ablation mode
}

TEST_CASE("config validation rejects bad settings") {
    TrainConfig cfg;
    cfg.dim_z = 0;
    CHECK_THROWS_AS(cfg.validate(), vab::ConfigError);
    cfg = TrainConfig{};
    cfg.lr_min = 0.01; // above lr0
    CHECK_THROWS_AS(cfg.validate(), vab::ConfigError);
    cfg = TrainConfig{};
    cfg.lr_decay = 1.0;
    CHECK_THROWS_AS(cfg.validate(), vab::ConfigError);
    cfg = TrainConfig{};
    cfg.tau_min = 0.0;
    CHECK_THROWS_AS(cfg.validate(), vab::ConfigError);
    CHECK_NOTHROW(TrainConfig{}.validate());
}

TEST_CASE("parameter initialization") {
    TrainConfig cfg;
    cfg.input_dim = 784;
    cfg.hidden = {500};
    cfg.dim_z = 8;
    cfg.num_clusters = 10;

    Rng rng(33);
    VabParams p = vab::init_params(cfg, rng);

    Tensor pi = p.mixture.pi();
    for (double v : pi.data) CHECK(v == Catch::Approx(0.1).margin(1e-15));
    for (double v : p.mixture.mu_z_logits.data) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
    for (const vab::DenseLayer& layer : p.encoder)
        for (double v : layer.b.data) CHECK(v == 0.0);

    // 784x500 layer: sample variance within 20% of the uniform target
    const Tensor& w = p.encoder[0].w;
    REQUIRE(w.rows() == 784);
    double bound = std::sqrt(6.0 / (784 + 500));
    double mean = 0.0;
    for (double v : w.data) {
        CHECK(std::abs(v) <= bound);
        mean += v;
    }
    mean /= static_cast<double>(w.numel());
    double var = 0.0;
    for (double v : w.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(w.numel() - 1);
    double target = bound * bound / 3.0;
    CHECK(var > 0.8 * target);
    CHECK(var < 1.2 * target);

    Rng rng2(33);
    VabParams q = vab::init_params(cfg, rng2);
    auto pt = vab::param_tensors(p);
    auto qt = vab::param_tensors(q);
    for (std::size_t t = 0; t < pt.size(); ++t) CHECK(pt[t]->data == qt[t]->data);
}

TEST_CASE("adam step behavior") {
    TrainConfig cfg;
    SECTION("zero gradient leaves parameters alone") {
        Rng rng(4);
        VabParams p = test_support::tiny_params(4, 3, 2, 2, rng);
        VabParams before = p;
        vab::AdamState st = vab::make_adam_state(p);
        VabParams zero = vab::zeros_like(p);
        vab::adam_step(p, zero, st, 0.001, cfg);
        CHECK(st.t == 1);
        auto pt = vab::param_tensors(p);
        auto bt = vab::param_tensors(before);
        for (std::size_t t = 0; t < pt.size(); ++t) CHECK(pt[t]->data == bt[t]->data);
    }
    SECTION("first step with unit gradient moves by about minus lr") {
        VabParams p;
        p.mixture.pi_logits = Tensor::vector_of({0.0});
        p.mixture.mu_z_logits = Tensor({1, 1});
        vab::DenseLayer l;
        l.w = Tensor({1, 1});
        l.b = Tensor({1});
        p.encoder.push_back(l);
        p.decoder.push_back(l);

        VabParams g = vab::zeros_like(p);
        g.mixture.pi_logits(0) = 1.0;
        vab::AdamState st = vab::make_adam_state(p);
        vab::adam_step(p, g, st, 0.001, cfg);
        CHECK(p.mixture.pi_logits(0) == Catch::Approx(-0.001).epsilon(1e-7));
        for (double v : vab::param_tensors(st.v)[0]->data) CHECK(v >= 0.0);
    }
    SECTION("non-finite gradients name the parameter group") {
        Rng rng(4);
        VabParams p = test_support::tiny_params(4, 3, 2, 2, rng);
        vab::AdamState st = vab::make_adam_state(p);
        VabParams g = vab::zeros_like(p);
        g.mixture.mu_z_logits(0, 0) = std::numeric_limits<double>::quiet_NaN();
        try {
            vab::adam_step(p, g, st, 0.001, cfg);
            FAIL("expected a throw");
        } catch (const vab::TrainingError& e) {
            CHECK(std::string(e.what()).find("mu_z_logits") != std::string::npos);
        }
    }
}

TEST_CASE("training on a separated bernoulli mixture") {
    Rng data_rng(500);
    vab::Dataset data = sample_bmm(separated_means3(16), 1200, data_rng);
    TrainConfig cfg = bmm_config();

    vab::TrainResult result = vab::train(cfg, data);
    REQUIRE(!result.aborted);
    CHECK(result.trace.size() == cfg.pretrain_epochs + cfg.epochs);
    for (std::size_t e = 0; e < result.trace.size(); ++e)
        CHECK(result.trace[e].epoch == e);

    std::vector<int> pred = vab::assign_cluster(result.checkpoint.params, data.images);
    double acc = vab::clustering_acc(pred, data.labels, 3);
    CHECK(acc >= 0.9);
}

TEST_CASE("elbo climbs through the early epochs") {
    Rng data_rng(505);
    vab::Dataset data = sample_bmm(separated_means3(16), 2000, data_rng);
    TrainConfig cfg = bmm_config();
    cfg.pretrain_epochs = 0;
    cfg.epochs = 21;
    cfg.batch_size = 100;
    cfg.lr0 = 0.0004; // slow climb keeps the whole window on the ascent
    cfg.lr_min = 0.0002;

    vab::TrainResult result = vab::train(cfg, data);
    REQUIRE(!result.aborted);
    for (std::size_t e = 4; e < 21; ++e) {
        double prev = result.trace[e - 1].elbo;
        double cur = result.trace[e].elbo;
        CHECK(cur >= prev - 0.005 * std::abs(prev));
    }
}

TEST_CASE("training is deterministic") {
    Rng data_rng(501);
    vab::Dataset data = sample_bmm(separated_means3(16), 500, data_rng);
    TrainConfig cfg = bmm_config();
    cfg.epochs = 4;
    cfg.pretrain_epochs = 1;

    vab::TrainResult a = vab::train(cfg, data);
    vab::TrainResult b = vab::train(cfg, data);
    std::vector<std::uint8_t> ba = vab::serialize_checkpoint(a.checkpoint);
    std::vector<std::uint8_t> bb = vab::serialize_checkpoint(b.checkpoint);
    CHECK(ba == bb);

    cfg.seed = 2;
    vab::TrainResult c = vab::train(cfg, data);
    CHECK(vab::serialize_checkpoint(c.checkpoint) != ba);
}

TEST_CASE("nan pixels abort with the last good checkpoint") {
    Rng data_rng(502);
    vab::Dataset data = sample_bmm(separated_means3(16), 300, data_rng);
    TrainConfig cfg = bmm_config();
    cfg.epochs = 6;
    cfg.pretrain_epochs = 0;

    data.images(250, 3) = std::numeric_limits<double>::quiet_NaN();
    vab::TrainResult result = vab::train(cfg, data);
    CHECK(result.aborted);
    CHECK(!result.abort_reason.empty());

    fs::path dir = scratch_dir("abort");
    fs::path path = dir / "aborted.ckpt";
    vab::save_checkpoint(result.checkpoint, path);
    vab::Checkpoint back = vab::load_checkpoint(path);
    CHECK(back.config == cfg);
    fs::remove_all(dir);
}

TEST_CASE("mixture warm start separates pretrained codes") {
    Rng data_rng(503);
    vab::Dataset data = sample_bmm(separated_means3(16), 900, data_rng);
    TrainConfig cfg = bmm_config();
    cfg.epochs = 1; // one joint epoch right after the warm start
    cfg.pretrain_epochs = 6;

    vab::TrainResult result = vab::train(cfg, data);
    REQUIRE(!result.aborted);
    Tensor pi = result.checkpoint.params.mixture.pi();
    double mx = 0.0;
    for (double v : pi.data) mx = std::max(mx, v);
    CHECK(mx < 0.9); // no component owns everything
}

TEST_CASE("checkpoint round trips byte for byte") {
    Rng data_rng(504);
    vab::Dataset data = sample_bmm(separated_means3(16), 200, data_rng);
    TrainConfig cfg = bmm_config();
    cfg.epochs = 2;
    cfg.pretrain_epochs = 0;
    vab::TrainResult result = vab::train(cfg, data);

    fs::path dir = scratch_dir("roundtrip");
    fs::path path = dir / "model.ckpt";
    vab::save_checkpoint(result.checkpoint, path);
    vab::Checkpoint loaded = vab::load_checkpoint(path);
    fs::path path2 = dir / "model2.ckpt";
    vab::save_checkpoint(loaded, path2);

    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::vector<char> c1((std::istreambuf_iterator<char>(f1)), {});
    std::vector<char> c2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(c1 == c2);
    CHECK(!c1.empty());

    CHECK(loaded.epoch == result.checkpoint.epoch);
    CHECK(loaded.config == cfg);
    CHECK(loaded.adam.t == result.checkpoint.adam.t);
    auto lt = vab::param_tensors(loaded.params);
    auto rt = vab::param_tensors(result.checkpoint.params);
    for (std::size_t t = 0; t < lt.size(); ++t) CHECK(lt[t]->data == rt[t]->data);
    fs::remove_all(dir);
}

TEST_CASE("checkpoint loader rejects malformed files") {
    Rng rng(7);
    vab::Checkpoint ckpt;
    ckpt.config = bmm_config();
    ckpt.params = vab::init_params(ckpt.config, rng);
    ckpt.adam = vab::make_adam_state(ckpt.params);
    std::vector<std::uint8_t> bytes = vab::serialize_checkpoint(ckpt);

    SECTION("corrupted magic") {
        auto bad = bytes;
        bad[0] = 'X';
        CHECK_THROWS_AS(vab::deserialize_checkpoint(bad), vab::FormatError);
    }
    SECTION("unsupported version") {
        auto bad = bytes;
        bad[4] = 99;
        CHECK_THROWS_AS(vab::deserialize_checkpoint(bad), vab::FormatError);
    }
    SECTION("truncation") {
        auto bad = bytes;
        bad.resize(bytes.size() / 2);
        CHECK_THROWS_AS(vab::deserialize_checkpoint(bad), vab::TruncationError);
        CHECK_THROWS_AS(vab::deserialize_checkpoint({}), vab::TruncationError);
    }
    SECTION("trailing bytes") {
        auto bad = bytes;
        bad.push_back(0);
        CHECK_THROWS_AS(vab::deserialize_checkpoint(bad), vab::FormatError);
    }
    SECTION("missing file") {
        CHECK_THROWS_AS(vab::load_checkpoint("/nonexistent/nowhere.ckpt"), vab::InputError);
    }
}

TEST_CASE("checkpoint size follows from the shape table") {
    Rng rng(8);
    vab::Checkpoint ckpt;
    ckpt.config = bmm_config();
    ckpt.params = vab::init_params(ckpt.config, rng);
    ckpt.adam = vab::make_adam_state(ckpt.params);
    std::vector<std::uint8_t> bytes = vab::serialize_checkpoint(ckpt);

    std::size_t expected = 4 + 4;                                   // magic + version
    expected += 22 * 8 + 8 * ckpt.config.hidden.size() + 2;        // config block
    expected += 8 + 8 + 8 + 4 * 8;                                 // epoch, t, rng key + state
    expected += 8;                                                 // tensor count
    std::size_t scalars = 0;
    for (const Tensor* t : vab::param_tensors(ckpt.params)) {
        expected += 8 + 8 * t->shape.size(); // ndim + dims
        scalars += t->numel();
    }
    expected += 3 * 8 * scalars; // params, adam m, adam v
    CHECK(bytes.size() == expected);
    CHECK(scalars == vab::param_count(ckpt.params));
}
