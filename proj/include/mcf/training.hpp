// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "mcf/atlas.hpp"
#include "mcf/common.hpp"
#include "mcf/datasets.hpp"

namespace mcf::train {

/// Learning-rate schedule applied per phase: constant, cosine annealing over
/// the phase length, or step decay (multiply by factor every decay_every
/// epochs).
struct ScheduleConfig {
    std::string kind = "constant";  // constant | cosine | step
    int decay_every = 0;            // step only
    double factor = 1.0;            // step only
    void validate() const;
};

/// Multiplier on the base learning rate for the given epoch of a phase.
double schedule_scale(const ScheduleConfig& schedule, int epoch, int total_epochs);

struct TrainConfig {
    int recon_epochs = 0;
    int ml_epochs = 0;
    int batch_size = 128;
    double learning_rate = 2e-4;
    std::string optimizer = "adam";  // adam | adamw
    double weight_decay = 0.0;
    ScheduleConfig lr_schedule;
    double recon_clip_norm = 0.0;  // 0 disables clipping for the phase
    double ml_clip_norm = 0.0;
    double reg_weight = 0.0;  // weight of the squared log-determinant regularizer
    int patience = 0;         // early stopping per phase; 0 disables
    std::uint64_t seed = 0;
    void validate() const;
};

/// Adam / AdamW over a fixed parameter list; state arrays follow the
/// parameter order. Serialization round-trips the moments for checkpoints.
class Optimizer {
public:
    Optimizer(std::vector<Arr*> params, const TrainConfig& cfg);

    /// grads must align with the construction-time parameter list.
    void step(const std::vector<Arr>& grads, double lr_scale = 1.0);

    int steps() const { return steps_; }
    /// Flat state: first moments then second moments, array by array.
    std::vector<double> serialize_state() const;
    void restore_state(const std::vector<double>& flat, int steps);

private:
    std::vector<Arr*> params_;
    std::vector<Arr> m_;
    std::vector<Arr> v_;
    double lr_, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    double weight_decay_;
    bool decoupled_;  // AdamW
    int steps_ = 0;
};

/// Global L2 norm across every entry of every gradient array.
double global_grad_norm(const std::vector<Arr>& grads);

/// Rescales the whole gradient list so its global norm is at most max_norm;
/// a no-op below the threshold, an exact scalar scaling above it.
void clip_gradients(std::vector<Arr>& grads, double max_norm);

struct ReconMetrics {
    double mse = 0.0;   // mean squared reconstruction error
    double reg = 0.0;   // mean squared sum of forward+inverse log-determinants
    double loss = 0.0;  // mse + reg_weight * reg
};

/// Records the reconstruction loss on the caller's tape: points run forward
/// through their encode-selected chart, the latent head is re-padded and run
/// back, and the squared round-trip log-determinant sum regularizes the pair.
/// Gradients flow to the chart flow and the index embeddings.
ad::Var recon_loss(ad::Tape& t, ad::BindingSet& b, atlas::Model& m, const Mat& x,
                   double reg_weight, ReconMetrics* metrics = nullptr);

/// Value-only reconstruction metrics (no gradients).
ReconMetrics recon_metrics(atlas::Model& m, const Mat& x, double reg_weight);

/// Negative mean latent log-likelihood of pre-encoded latents; gradients
/// reach only the base flow.
ad::Var ml_loss_latent(ad::Tape& t, ad::BindingSet& b, atlas::Model& m, const Mat& latents);

/// Convenience wrapper: encodes x through the frozen charts (values only,
/// no gradient path) and scores the latents.
ad::Var ml_loss(ad::Tape& t, ad::BindingSet& b, atlas::Model& m, const Mat& x);

struct MetricsRow {
    int epoch = 0;
    std::string phase;  // recon | ml
    double train_loss = 0.0;
    double val_metric = 0.0;  // recon: val MSE; ml: val NLL
};

struct TrainState {
    int epoch = 0;            // last completed epoch of the last phase that ran
    std::string phase = "none";
    double best_val_metric = std::numeric_limits<double>::quiet_NaN();
    double best_recon_val = std::numeric_limits<double>::quiet_NaN();
    double best_ml_val = std::numeric_limits<double>::quiet_NaN();
    bool diverged = false;
    std::string divergence_phase;
    std::vector<MetricsRow> history;

    /// End-of-phase optimizer moments / step counts and the textual shuffle
    /// engine states, captured so checkpoints can persist them.
    std::vector<double> recon_optimizer_state;
    std::vector<double> ml_optimizer_state;
    int recon_steps = 0;
    int ml_steps = 0;
    std::string recon_rng_state;
    std::string ml_rng_state;
};

struct TrainHooks {
    /// Fires when a phase's validation metric improves (after the model has
    /// been snapshotted); the model argument holds the improving parameters.
    std::function<void(const TrainState&, const atlas::Model&)> on_best;
    /// Fires after every epoch with the freshly appended metrics row.
    std::function<void(const MetricsRow&)> on_epoch;
};

/// Two-phase optimization: a reconstruction phase updating chart flow +
/// index embeddings, then a maximum-likelihood phase updating only the base
/// flow. Each phase ends by restoring its best-validation parameters. Five
/// consecutive non-finite batch losses abort the phase with the best
/// checkpoint retained. Deterministic given (config, seed, dataset).
TrainState train(atlas::Model& m, const data::Dataset& dataset, const TrainConfig& cfg,
                 const TrainHooks& hooks = {});

}  // namespace mcf::train
