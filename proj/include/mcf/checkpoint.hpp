// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcf/atlas.hpp"
#include "mcf/config.hpp"
#include "mcf/training.hpp"

namespace mcf::checkpoint {

/// Directory layout written by save():
///   config.toml    canonical experiment configuration
///   params.bin     chart centers, index embeddings, and both flows
///   optimizer.bin  Adam moments and step counts per phase
///   rng.bin        textual shuffle-engine states per phase
///   metrics.csv    epoch, phase, train_loss, val_metric history
/// params.bin and optimizer.bin embed the config hash; loads against a
/// different configuration fail instead of reinterpreting bytes.

void write_params(const std::string& path, std::uint64_t hash, atlas::Model& m);
/// Restores every array in place; throws on magic, hash, or shape mismatch.
void read_params(const std::string& path, std::uint64_t hash, atlas::Model& m);

void write_optimizer(const std::string& path, std::uint64_t hash,
                     const train::TrainState& state);
void write_rng(const std::string& path, const train::TrainState& state);

void write_metrics(const std::string& path, const std::vector<train::MetricsRow>& history);
std::vector<train::MetricsRow> read_metrics(const std::string& path);

/// Writes the full checkpoint directory (created if needed).
void save(const std::string& dir, const config::ExperimentConfig& cfg, atlas::Model& m,
          const train::TrainState& state);

struct Loaded {
    config::ExperimentConfig cfg;
    atlas::Model model;
};

/// Reads config.toml, rebuilds the model skeleton from it, and restores the
/// trained parameters after verifying the embedded config hash.
Loaded load(const std::string& dir);

}  // namespace mcf::checkpoint
