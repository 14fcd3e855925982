// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "mcf/checkpoint.hpp"
#include "mcf/config.hpp"
#include "mcf/datasets.hpp"
#include "mcf/eval.hpp"
#include "mcf/training.hpp"

namespace mcf::cmd {

/// Materializes the configured dataset: a named generator with the split
/// sizes from the config, or the latitude/longitude CSV when csv_path is
/// set (80/20 shuffled split). The configured affine normalization
/// (x - center) / scale is applied to both splits.
data::Dataset build_dataset(const config::ExperimentConfig& cfg);

/// Writes one point per row, "x0,x1,..." header, full double precision.
void write_points_csv(const Mat& points, const std::string& path);
Mat read_points_csv(const std::string& path);

struct GenerateResult {
    std::string prefix;  // out_dir/<dataset name>; .train.csv/.val.csv/.bin/.json follow
    int n_train = 0;
    int n_val = 0;
};

/// generate: dataset CSVs (authoritative) plus the binary sidecar.
GenerateResult generate(const config::ExperimentConfig& cfg, const std::string& out_dir);

struct TrainResult {
    std::string checkpoint_dir;
    train::TrainState state;
};

/// train: two-phase optimization, per-epoch progress on `out`, checkpoint
/// directory (config.toml, params.bin, optimizer.bin, rng.bin, metrics.csv)
/// written into out_dir. data_dir may hold a prior `generate` output; when
/// empty the dataset is built in memory.
TrainResult train(const config::ExperimentConfig& cfg, const std::string& data_dir,
                  const std::string& out_dir, std::ostream* out = nullptr);

/// sample: n ambient-space draws from the checkpointed model into a CSV.
void sample(const std::string& checkpoint_dir, int n, std::uint64_t seed,
            const std::string& out_csv);

/// eval: scores the checkpointed model on its configured validation data and
/// writes the report as JSON. mode_override (possibly empty) replaces the
/// configured density-mode list with a single mode.
eval::EvalReport evaluate(const std::string& checkpoint_dir, const std::string& data_dir,
                          const std::string& out_json, const std::string& mode_override = "");

/// plot from a checkpoint: "mollweide"/"poincare" render exact-mode density
/// heatmaps; "scatter3d" draws fresh model samples colored by density.
void plot_model(const std::string& checkpoint_dir, const std::string& projection,
                const std::string& out_png, int width = 384);

/// plot from a config only: scatters the dataset's training split.
void plot_dataset(const config::ExperimentConfig& cfg, const std::string& projection,
                  const std::string& out_png, int width = 384);

}  // namespace mcf::cmd
