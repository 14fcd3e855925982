// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcf/atlas.hpp"
#include "mcf/eval.hpp"
#include "mcf/training.hpp"

namespace mcf::config {

/// Where the points come from: a named generator with split sizes, or a
/// latitude/longitude CSV. An optional affine normalization (x - center) /
/// scale is applied after generation (identity by default).
struct DatasetBlock {
    std::string name = "wrapped_normals_sphere";
    int n_train = 50000;
    int n_val = 10000;
    std::uint64_t seed = 0;
    std::string csv_path;  // non-empty selects the CSV loader
    std::string lat_column = "latitude";
    std::string lon_column = "longitude";
    std::vector<double> normalize_center;  // empty = no shift
    double normalize_scale = 1.0;
};

/// One row of the architecture tables; converts 1:1 into atlas::ModelSpec
/// (both flows share the conditioner shape, as in the tables).
struct ModelBlock {
    int ambient_dim = 3;
    int latent_dim = 2;
    int n_charts = 4;
    int index_dim = 2;
    int chart_layers = 2;
    int chart_bins = 8;
    double chart_range = 3.0;
    int base_layers = 2;
    int base_bins = 8;
    double base_range = 3.0;
    std::string linear = "none";  // none | lu | permute
    int hidden_layers = 2;
    int hidden_units = 64;
    std::string activation = "relu";
    int residual_blocks = 0;

    atlas::ModelSpec to_spec() const;
};

struct EvalBlock {
    double kde_bandwidth = 0.1;
    std::vector<std::string> modes{"exact", "bound"};
    int quadrature_lat = 0;  // 0 disables the sphere normalization check
    int quadrature_lon = 0;
    int n_model_samples = 0;  // 0 = validation-split size

    eval::EvalOptions to_options(std::uint64_t seed) const;
};

struct ExperimentConfig {
    std::string name = "experiment";
    DatasetBlock dataset;
    ModelBlock model;
    train::TrainConfig train;
    EvalBlock eval;

    /// Every violated constraint, one message per field; empty means valid.
    std::vector<std::string> problems() const;
    /// Throws McfError listing all problems at once.
    void validate() const;
};

/// Parses the TOML subset used by the config files: [section] headers,
/// `key = value` lines with string / number / boolean / homogeneous-array
/// values, and # comments. Unknown sections or keys and missing required
/// keys are all reported together.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Canonical form: fixed section and key order, exact double round-trip.
/// parse_config(serialize_config(c)) reproduces c field-for-field.
std::string serialize_config(const ExperimentConfig& c);
void save_config(const ExperimentConfig& c, const std::string& path);

/// FNV-1a over the canonical serialization; checkpoints embed it so a
/// parameter file can never be loaded under a different architecture.
std::uint64_t config_hash(const ExperimentConfig& c);

}  // namespace mcf::config
