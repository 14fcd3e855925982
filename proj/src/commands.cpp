// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcf/commands.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mcf/density.hpp"
#include "mcf/plot.hpp"

namespace mcf::cmd {

namespace {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void apply_normalization(data::Dataset& ds, const config::DatasetBlock& block) {
    const bool shift = !block.normalize_center.empty();
    if (!shift && block.normalize_scale == 1.0) return;
    Vec center = Vec::Zero(ds.ambient_dim);
    if (shift) {
        if (static_cast<int>(block.normalize_center.size()) != ds.ambient_dim) {
            throw McfError("build_dataset: normalize_center length differs from ambient dim");
        }
        center = Eigen::Map<const Vec>(block.normalize_center.data(),
                                       static_cast<Eigen::Index>(block.normalize_center.size()));
    }
    for (Mat* points : {&ds.train.points, &ds.val.points}) {
        *points = (points->colwise() - center) / block.normalize_scale;
    }
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw McfError("cannot create directory " + dir + ": " + ec.message());
}

/// Prefers a prior `generate` output in data_dir, otherwise builds fresh.
data::Dataset dataset_for(const config::ExperimentConfig& cfg, const std::string& data_dir) {
    if (!data_dir.empty()) {
        const std::string prefix = data_dir + "/" + cfg.dataset.name;
        if (fs::exists(prefix + ".bin")) {
            data::Dataset ds = data::load_dataset(prefix);
            return ds;
        }
    }
    return build_dataset(cfg);
}

}  // namespace

data::Dataset build_dataset(const config::ExperimentConfig& cfg) {
    cfg.validate();
    data::Dataset ds;
    if (!cfg.dataset.csv_path.empty()) {
        data::GeoLoadResult geo =
            data::load_geo_csv(cfg.dataset.csv_path, cfg.dataset.lat_column,
                               cfg.dataset.lon_column, cfg.dataset.seed);
        ds = std::move(geo.dataset);
        ds.name = cfg.dataset.name;
    } else {
        ds = data::make_dataset(cfg.dataset.name, cfg.dataset.n_train, cfg.dataset.n_val,
                                cfg.dataset.seed);
    }
    apply_normalization(ds, cfg.dataset);
    return ds;
}

void write_points_csv(const Mat& points, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw McfError("write_points_csv: cannot write " + path);
    for (Eigen::Index i = 0; i < points.rows(); ++i) out << (i ? ",x" : "x") << i;
    if (points.rows() == 0) out << "x0";  // header even for an empty batch
    out << "\n";
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            out << (i ? "," : "") << format_double(points(i, j));
        }
        out << "\n";
    }
    if (!out) throw McfError("write_points_csv: write to " + path + " failed");
}

Mat read_points_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw McfError("read_points_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw McfError("read_points_csv: empty file " + path);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && rows.front().size() != row.size()) {
            throw McfError("read_points_csv: ragged rows in " + path);
        }
        rows.push_back(std::move(row));
    }
    const Eigen::Index dim = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
    Mat points(dim, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j) {
        for (Eigen::Index i = 0; i < dim; ++i) {
            points(i, static_cast<Eigen::Index>(j)) = rows[j][static_cast<std::size_t>(i)];
        }
    }
    return points;
}

GenerateResult generate(const config::ExperimentConfig& cfg, const std::string& out_dir) {
    ensure_dir(out_dir);
    data::Dataset ds = build_dataset(cfg);
    GenerateResult result;
    result.prefix = out_dir + "/" + ds.name;
    result.n_train = ds.train.count();
    result.n_val = ds.val.count();
    write_points_csv(ds.train.points, result.prefix + ".train.csv");
    write_points_csv(ds.val.points, result.prefix + ".val.csv");
    data::save_dataset(ds, result.prefix);
    return result;
}

TrainResult train(const config::ExperimentConfig& cfg, const std::string& data_dir,
                  const std::string& out_dir, std::ostream* out) {
    cfg.validate();
    ensure_dir(out_dir);
    data::Dataset ds = dataset_for(cfg, data_dir);
    if (ds.ambient_dim != cfg.model.ambient_dim) {
        throw McfError("train: dataset dimension " + std::to_string(ds.ambient_dim) +
                       " does not match model ambient_dim " +
                       std::to_string(cfg.model.ambient_dim));
    }

    atlas::Model model(cfg.model.to_spec(), cfg.train.seed);
    train::TrainHooks hooks;
    if (out) {
        hooks.on_epoch = [&](const train::MetricsRow& row) {
            (*out) << "epoch " << row.epoch << " [" << row.phase << "] train " << row.train_loss
                   << " val " << row.val_metric << "\n";
        };
    }
    TrainResult result;
    result.state = train::train(model, ds, cfg.train, hooks);
    result.checkpoint_dir = out_dir;
    checkpoint::save(out_dir, cfg, model, result.state);
    if (out) {
        (*out) << "checkpoint written to " << out_dir;
        if (result.state.diverged) {
            (*out) << " (training diverged during the " << result.state.divergence_phase
                   << " phase; best parameters retained)";
        }
        (*out) << "\n";
    }
    return result;
}

void sample(const std::string& checkpoint_dir, int n, std::uint64_t seed,
            const std::string& out_csv) {
    if (n < 0) throw McfError("sample: n must be >= 0");
    checkpoint::Loaded loaded = checkpoint::load(checkpoint_dir);
    Mat points(loaded.model.spec.ambient_dim, 0);
    if (n > 0) points = atlas::sample(loaded.model, n, seed).points;
    write_points_csv(points, out_csv);
}

eval::EvalReport evaluate(const std::string& checkpoint_dir, const std::string& data_dir,
                          const std::string& out_json, const std::string& mode_override) {
    checkpoint::Loaded loaded = checkpoint::load(checkpoint_dir);
    config::ExperimentConfig cfg = loaded.cfg;
    if (!mode_override.empty()) {
        // Accept the short CLI spelling for the Hutchinson estimator.
        cfg.eval.modes = {mode_override == "hutchinson" ? "hutchinson_bound" : mode_override};
    }
    cfg.validate();
    data::Dataset ds = dataset_for(cfg, data_dir);
    eval::EvalReport report =
        eval::evaluate(loaded.model, ds, cfg.eval.to_options(cfg.train.seed));

    nlohmann::json j;
    j["experiment"] = cfg.name;
    j["dataset"] = ds.name;
    j["n_points"] = report.n_points;
    j["seed"] = report.seed;
    j["mean_nll"] = report.mean_nll;
    j["mean_recon_error"] = report.mean_recon_error;
    j["kde_score"] = report.kde_score;
    j["kde_score_transposed"] = report.kde_score_transposed;
    if (std::isnan(report.normalization_integral)) {
        j["normalization_integral"] = nullptr;
    } else {
        j["normalization_integral"] = report.normalization_integral;
        j["normalization_degenerate"] = report.normalization_degenerate;
    }
    std::ofstream out(out_json);
    if (!out) throw McfError("evaluate: cannot write " + out_json);
    out << j.dump(2) << "\n";
    if (!out) throw McfError("evaluate: write to " + out_json + " failed");
    return report;
}

void plot_model(const std::string& checkpoint_dir, const std::string& projection,
                const std::string& out_png, int width) {
    checkpoint::Loaded loaded = checkpoint::load(checkpoint_dir);
    plot::Image img;
    if (projection == "mollweide") {
        img = plot::density_mollweide(loaded.model, width);
    } else if (projection == "poincare") {
        img = plot::density_poincare(loaded.model, width);
    } else if (projection == "scatter3d") {
        if (loaded.model.spec.ambient_dim != 3) {
            throw McfError("plot: scatter3d needs a 3-D ambient model");
        }
        const PointBatch draws = atlas::sample(loaded.model, 4000, loaded.cfg.train.seed + 17);
        density::DensityOptions opts;
        opts.allow_degenerate = true;
        const density::DensityResult res =
            density::log_prob_manifold(loaded.model, draws.points, density::Mode::exact, opts);
        img = plot::scatter3d(draws.points, &res.log_prob, width);
    } else {
        throw McfError("plot: unknown projection '" + projection +
                       "' (expected mollweide | poincare | scatter3d)");
    }
    plot::write_png(img, out_png);
}

void plot_dataset(const config::ExperimentConfig& cfg, const std::string& projection,
                  const std::string& out_png, int width) {
    data::Dataset ds = build_dataset(cfg);
    plot::Image img;
    if (projection == "mollweide") {
        img = plot::scatter_mollweide(ds.train.points, width);
    } else if (projection == "poincare") {
        img = plot::scatter_poincare(ds.train.points, width);
    } else if (projection == "scatter3d") {
        img = plot::scatter3d(ds.train.points, nullptr, width);
    } else {
        throw McfError("plot: unknown projection '" + projection +
                       "' (expected mollweide | poincare | scatter3d)");
    }
    plot::write_png(img, out_png);
}

}  // namespace mcf::cmd
