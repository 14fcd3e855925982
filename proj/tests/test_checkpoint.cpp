// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "mcf/checkpoint.hpp"
#include "mcf/datasets.hpp"

using namespace mcf;
using config::ExperimentConfig;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("mcf-ckpt-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int n = 0;
        return n;
    }
    std::string str() const { return path.string(); }
};

ExperimentConfig desk_config() {
    ExperimentConfig c;
    c.name = "wrapped-desk";
    c.dataset.name = "wrapped_normals_sphere";
    c.dataset.n_train = 96;
    c.dataset.n_val = 32;
    c.dataset.seed = 5;
    c.model.ambient_dim = 3;
    c.model.latent_dim = 2;
    c.model.n_charts = 4;
    c.model.index_dim = 2;
    c.model.chart_layers = 2;
    c.model.chart_bins = 4;
    c.model.chart_range = 3.0;
    c.model.base_layers = 2;
    c.model.base_bins = 4;
    c.model.base_range = 3.0;
    c.model.linear = "none";
    c.model.hidden_layers = 1;
    c.model.hidden_units = 16;
    c.model.activation = "tanh";
    c.model.residual_blocks = 0;
    c.train.recon_epochs = 2;
    c.train.ml_epochs = 2;
    c.train.batch_size = 32;
    c.train.learning_rate = 1e-3;
    c.train.optimizer = "adam";
    c.train.ml_clip_norm = 1.0;
    c.train.reg_weight = 0.5;
    c.train.seed = 5;
    c.eval.kde_bandwidth = 0.1;
    c.eval.modes = {"exact", "bound"};
    return c;
}

bool arrays_identical(const Arr& a, const Arr& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    return std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

TEST_CASE("a trained model survives the save/load round trip bit-for-bit") {
    TempDir dir;
    ExperimentConfig cfg = desk_config();
    data::Dataset ds = data::make_dataset(cfg.dataset.name, cfg.dataset.n_train,
                                          cfg.dataset.n_val, cfg.dataset.seed);
    atlas::Model m(cfg.model.to_spec(), cfg.train.seed);
    train::TrainState state = train::train(m, ds, cfg.train);
    REQUIRE(!state.diverged);
    REQUIRE(state.history.size() == 4);
    CHECK(!state.recon_optimizer_state.empty());
    CHECK(!state.ml_optimizer_state.empty());
    CHECK(state.recon_steps == 2 * 3);  // 2 epochs x ceil(96 / 32) batches
    CHECK(!state.recon_rng_state.empty());

    checkpoint::save(dir.str(), cfg, m, state);
    for (const char* file :
         {"config.toml", "params.bin", "optimizer.bin", "rng.bin", "metrics.csv"}) {
        CHECK(fs::exists(dir.path / file));
    }

    checkpoint::Loaded loaded = checkpoint::load(dir.str());
    CHECK(config::serialize_config(loaded.cfg) == config::serialize_config(cfg));
    CHECK(loaded.model.centers == m.centers);
    auto orig = m.all_parameters();
    auto back = loaded.model.all_parameters();
    REQUIRE(orig.size() == back.size());
    for (std::size_t i = 0; i < orig.size(); ++i) CHECK(arrays_identical(*orig[i], *back[i]));

    // The strongest equivalence: generation from the restored model matches.
    PointBatch a = atlas::sample(m, 64, 123);
    PointBatch b = atlas::sample(loaded.model, 64, 123);
    CHECK(a.points == b.points);

    // Metrics round trip exactly through the CSV.
    auto rows = checkpoint::read_metrics(dir.str() + "/metrics.csv");
    REQUIRE(rows.size() == state.history.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].epoch == state.history[i].epoch);
        CHECK(rows[i].phase == state.history[i].phase);
        CHECK(rows[i].train_loss == state.history[i].train_loss);
        CHECK(rows[i].val_metric == state.history[i].val_metric);
    }

    // rng.bin is a readable text dump with both engine states.
    std::ifstream rng(dir.path / "rng.bin");
    std::string header;
    std::getline(rng, header);
    CHECK(header == "mcf-rng v1");
}

TEST_CASE("a checkpoint never loads under a different configuration") {
    TempDir dir;
    ExperimentConfig cfg = desk_config();
    atlas::Model m(cfg.model.to_spec(), cfg.train.seed);
    train::TrainState state;
    checkpoint::save(dir.str(), cfg, m, state);

    // Same architecture, different training seed: the hash must differ and
    // the load must fail loudly rather than reinterpret the parameters.
    ExperimentConfig other = cfg;
    other.train.seed = 6;
    config::save_config(other, dir.str() + "/config.toml");
    CHECK_THROWS_WITH_AS(checkpoint::load(dir.str()),
                         doctest::Contains("config-hash mismatch"), McfError);

    // Direct API: reading the params under the wrong hash fails the same way.
    atlas::Model fresh(cfg.model.to_spec(), cfg.train.seed);
    CHECK_THROWS_WITH_AS(
        checkpoint::read_params(dir.str() + "/params.bin", config::config_hash(other), fresh),
        doctest::Contains("config-hash mismatch"), McfError);
}

TEST_CASE("corrupt parameter files are rejected") {
    TempDir dir;
    ExperimentConfig cfg = desk_config();
    atlas::Model m(cfg.model.to_spec(), cfg.train.seed);
    const std::uint64_t hash = config::config_hash(cfg);
    const std::string path = dir.str() + "/params.bin";
    checkpoint::write_params(path, hash, m);

    SUBCASE("truncation") {
        const auto full = fs::file_size(path);
        fs::resize_file(path, full / 2);
        CHECK_THROWS_WITH_AS(checkpoint::read_params(path, hash, m),
                             doctest::Contains("truncated"), McfError);
    }

    SUBCASE("foreign magic") {
        std::ofstream out(path, std::ios::binary);
        out << "NOTMYFMT and then some bytes";
        out.close();
        CHECK_THROWS_WITH_AS(checkpoint::read_params(path, hash, m),
                             doctest::Contains("not a recognized checkpoint file"), McfError);
    }

    SUBCASE("architecture shape mismatch under an identical hash") {
        ExperimentConfig wider = cfg;
        wider.model.n_charts = 6;
        atlas::Model w(wider.model.to_spec(), cfg.train.seed);
        CHECK_THROWS_AS(checkpoint::read_params(path, hash, w), McfError);
    }
}

TEST_CASE("missing checkpoint paths fail with clear errors") {
    TempDir dir;
    ExperimentConfig cfg = desk_config();
    atlas::Model m(cfg.model.to_spec(), cfg.train.seed);
    CHECK_THROWS_AS(checkpoint::read_params(dir.str() + "/absent.bin", 0, m), McfError);
    CHECK_THROWS_AS(checkpoint::load(dir.str()), McfError);
    CHECK_THROWS_AS(checkpoint::read_metrics(dir.str() + "/absent.csv"), McfError);
}
