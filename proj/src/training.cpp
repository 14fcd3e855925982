// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcf/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

namespace mcf::train {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr int kDivergenceLimit = 5;

std::string engine_state(RandomStream& rng) {
    std::ostringstream os;
    os << rng.engine();
    return os.str();
}

bool all_finite(const std::vector<Arr>& arrays) {
    for (const Arr& a : arrays)
        if (!a.isFinite().all()) return false;
    return true;
}

std::vector<Arr> collect_grads(const ad::BindingSet& b, const std::vector<Arr*>& params) {
    std::vector<Arr> grads(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Arr* g = b.grad_of(params[i]);
        grads[i] = g ? *g : Arr::Zero(params[i]->rows(), params[i]->cols());
    }
    return grads;
}

Mat gather_columns(const Mat& src, const std::vector<int>& idx, int begin, int end) {
    Mat out(src.rows(), end - begin);
    for (int i = begin; i < end; ++i) out.col(i - begin) = src.col(idx[i]);
    return out;
}

double validation_mse(atlas::Model& m, const Mat& points) {
    Mat rec = atlas::reconstruct(m, points);
    return (rec - points).colwise().squaredNorm().mean();
}

double validation_nll(atlas::Model& m, const Mat& latents) {
    ad::Tape t(false);
    ad::BindingSet b(t);
    ad::Var loss = ml_loss_latent(t, b, m, latents);
    return t.val(loss)(0, 0);
}

}  // namespace

void ScheduleConfig::validate() const {
    if (kind != "constant" && kind != "cosine" && kind != "step")
        throw McfError("lr_schedule: unknown kind '" + kind +
                       "' (expected constant | cosine | step)");
    if (kind == "step") {
        if (decay_every < 1) throw McfError("lr_schedule: step decay_every must be >= 1");
        if (!(factor > 0.0 && factor <= 1.0))
            throw McfError("lr_schedule: step factor must be in (0, 1]");
    }
}

double schedule_scale(const ScheduleConfig& schedule, int epoch, int total_epochs) {
    schedule.validate();
    if (epoch < 0 || total_epochs < 1 || epoch >= total_epochs)
        throw McfError("schedule_scale: epoch out of range");
    if (schedule.kind == "cosine")
        return 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(epoch) / total_epochs));
    if (schedule.kind == "step")
        return std::pow(schedule.factor, epoch / schedule.decay_every);
    return 1.0;
}

void TrainConfig::validate() const {
    if (recon_epochs < 0 || ml_epochs < 0) throw McfError("TrainConfig: negative epoch count");
    if (batch_size < 1) throw McfError("TrainConfig: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw McfError("TrainConfig: learning_rate must be positive");
    if (optimizer != "adam" && optimizer != "adamw")
        throw McfError("TrainConfig: unknown optimizer '" + optimizer +
                       "' (expected adam | adamw)");
    if (weight_decay < 0.0) throw McfError("TrainConfig: negative weight_decay");
    if (recon_clip_norm < 0.0 || ml_clip_norm < 0.0)
        throw McfError("TrainConfig: clip norm must be positive when set (0 disables)");
    if (reg_weight < 0.0) throw McfError("TrainConfig: negative reg_weight");
    if (patience < 0) throw McfError("TrainConfig: negative patience");
    lr_schedule.validate();
}

Optimizer::Optimizer(std::vector<Arr*> params, const TrainConfig& cfg)
    : params_(std::move(params)),
      lr_(cfg.learning_rate),
      weight_decay_(cfg.weight_decay),
      decoupled_(cfg.optimizer == "adamw") {
    cfg.validate();
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (Arr* p : params_) {
        if (p == nullptr) throw McfError("Optimizer: null parameter");
        m_.push_back(Arr::Zero(p->rows(), p->cols()));
        v_.push_back(Arr::Zero(p->rows(), p->cols()));
    }
}

void Optimizer::step(const std::vector<Arr>& grads, double lr_scale) {
    if (grads.size() != params_.size()) throw McfError("Optimizer: gradient list size mismatch");
    ++steps_;
    const double lr_eff = lr_ * lr_scale;
    const double bc1 = 1.0 - std::pow(beta1_, steps_);
    const double bc2 = 1.0 - std::pow(beta2_, steps_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Arr& p = *params_[i];
        if (grads[i].rows() != p.rows() || grads[i].cols() != p.cols())
            throw McfError("Optimizer: gradient shape mismatch");
        Arr g = grads[i];
        if (!decoupled_ && weight_decay_ > 0.0) g += weight_decay_ * p;  // coupled L2
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.square();
        p -= lr_eff * (m_[i] / bc1) / ((v_[i] / bc2).sqrt() + eps_);
        if (decoupled_ && weight_decay_ > 0.0) p -= lr_eff * weight_decay_ * p;
    }
}

std::vector<double> Optimizer::serialize_state() const {
    std::vector<double> flat;
    for (const auto* bank : {&m_, &v_})
        for (const Arr& a : *bank) flat.insert(flat.end(), a.data(), a.data() + a.size());
    return flat;
}

void Optimizer::restore_state(const std::vector<double>& flat, int steps) {
    std::size_t total = 0;
    for (const Arr& a : m_) total += a.size();
    if (flat.size() != 2 * total) throw McfError("Optimizer: state size mismatch");
    std::size_t off = 0;
    for (auto* bank : {&m_, &v_})
        for (Arr& a : *bank) {
            std::copy(flat.begin() + off, flat.begin() + off + a.size(), a.data());
            off += a.size();
        }
    steps_ = steps;
}

double global_grad_norm(const std::vector<Arr>& grads) {
    double sq = 0.0;
    for (const Arr& g : grads) sq += g.matrix().squaredNorm();
    return std::sqrt(sq);
}

void clip_gradients(std::vector<Arr>& grads, double max_norm) {
    if (!(max_norm > 0.0)) throw McfError("clip_gradients: max_norm must be positive");
    const double norm = global_grad_norm(grads);
    if (norm <= max_norm) return;
    const double scale = max_norm / norm;
    for (Arr& g : grads) g *= scale;
}

ad::Var recon_loss(ad::Tape& t, ad::BindingSet& b, atlas::Model& m, const Mat& x,
                   double reg_weight, ReconMetrics* metrics) {
    if (x.rows() != m.spec.ambient_dim) throw McfError("recon_loss: ambient dimension mismatch");
    if (x.cols() < 1) throw McfError("recon_loss: empty batch");
    if (!x.allFinite()) throw McfError("recon_loss: non-finite batch");

    // Chart choice is the discrete nearest-center rule; it is held fixed for
    // the differentiable pass.
    const std::vector<int> chart = atlas::encode(m, x).chart;
    ad::Var ctx = atlas::context_bound(t, b, m, chart);
    ad::Var xv = t.constant(x.array());

    flow::FlowResult fwd = m.chart_flow.forward(t, b, xv, ctx);
    ad::Var head = t.rows(fwd.y, 0, m.spec.latent_dim);
    ad::Var padded = atlas::pad_on_tape(t, head, m.spec.ambient_dim);
    flow::FlowResult inv = m.chart_flow.inverse(t, b, padded, ctx);

    ad::Var mse = t.mean_all(t.colsum(t.square(t.sub(inv.y, xv))));
    ad::Var reg = t.mean_all(t.square(t.add(fwd.logdet, inv.logdet)));
    ad::Var loss = t.add(mse, t.mul_s(reg, reg_weight));

    if (metrics) {
        metrics->mse = t.val(mse)(0, 0);
        metrics->reg = t.val(reg)(0, 0);
        metrics->loss = t.val(loss)(0, 0);
    }
    return loss;
}

ReconMetrics recon_metrics(atlas::Model& m, const Mat& x, double reg_weight) {
    ad::Tape t(false);
    ad::BindingSet b(t);
    ReconMetrics metrics;
    recon_loss(t, b, m, x, reg_weight, &metrics);
    return metrics;
}

ad::Var ml_loss_latent(ad::Tape& t, ad::BindingSet& b, atlas::Model& m, const Mat& latents) {
    if (latents.rows() != m.spec.latent_dim)
        throw McfError("ml_loss_latent: latent dimension mismatch");
    if (latents.cols() < 1) throw McfError("ml_loss_latent: empty batch");
    if (!latents.allFinite()) throw McfError("ml_loss_latent: non-finite latents");

    ad::Var lv = t.constant(latents.array());
    flow::FlowResult fwd = m.base_flow.forward(t, b, lv, ad::Var{});
    const double norm_const = -0.5 * m.spec.latent_dim * kLog2Pi;
    ad::Var lp = t.add(t.add_s(t.mul_s(t.colsum(t.square(fwd.y)), -0.5), norm_const), fwd.logdet);
    return t.neg(t.mean_all(lp));
}

ad::Var ml_loss(ad::Tape& t, ad::BindingSet& b, atlas::Model& m, const Mat& x) {
    // Charts participate values-only: no gradient path exists toward them.
    atlas::EncodeResult enc = atlas::encode(m, x);
    return ml_loss_latent(t, b, m, enc.latents);
}

namespace {

/// Shared single-phase driver. step_fn runs one optimization step and
/// returns the batch training loss; val_fn scores the validation split.
struct PhaseRunner {
    atlas::Model& model;
    TrainState& state;
    const TrainHooks& hooks;
    const std::string phase;
    const int epochs;
    const int n_points;
    const int batch_size;
    const ScheduleConfig& schedule;
    const int patience;
    RandomStream& shuffle_rng;
    std::vector<Arr*> params;
    std::function<double(const std::vector<int>&, int, int, double)> step_fn;
    std::function<double()> val_fn;

    double run() {
        std::vector<Arr> best(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) best[i] = *params[i];
        double best_val = std::numeric_limits<double>::infinity();
        int bad_steps = 0;
        int stale_epochs = 0;

        std::vector<int> idx(n_points);
        std::iota(idx.begin(), idx.end(), 0);

        for (int epoch = 0; epoch < epochs; ++epoch) {
            const double lr_scale = schedule_scale(schedule, epoch, epochs);
            shuffle_rng.shuffle(idx);

            double loss_sum = 0.0;
            int loss_batches = 0;
            for (int begin = 0; begin < n_points; begin += batch_size) {
                const int end = std::min(n_points, begin + batch_size);
                const double loss = step_fn(idx, begin, end, lr_scale);
                if (std::isfinite(loss)) {
                    bad_steps = 0;
                    loss_sum += loss * (end - begin);
                    loss_batches += end - begin;
                } else if (++bad_steps >= kDivergenceLimit) {
                    state.diverged = true;
                    state.divergence_phase = phase;
                    restore(best);
                    return best_val;
                }
            }

            const double train_loss =
                loss_batches > 0 ? loss_sum / loss_batches : std::numeric_limits<double>::quiet_NaN();
            const double val = val_fn();
            MetricsRow row{epoch, phase, train_loss, val};
            state.history.push_back(row);
            state.epoch = epoch;
            state.phase = phase;
            if (hooks.on_epoch) hooks.on_epoch(row);

            if (val < best_val) {
                best_val = val;
                for (std::size_t i = 0; i < params.size(); ++i) best[i] = *params[i];
                state.best_val_metric = best_val;
                stale_epochs = 0;
                if (hooks.on_best) hooks.on_best(state, model);
            } else if (patience > 0 && ++stale_epochs >= patience) {
                break;
            }
        }
        restore(best);
        return best_val;
    }

    void restore(const std::vector<Arr>& best) {
        for (std::size_t i = 0; i < params.size(); ++i) *params[i] = best[i];
    }
};

}  // namespace

TrainState train(atlas::Model& m, const data::Dataset& dataset, const TrainConfig& cfg,
                 const TrainHooks& hooks) {
    cfg.validate();
    const Mat& train_pts = dataset.train.points;
    const Mat& val_pts = dataset.val.points;
    if (train_pts.cols() < 1) throw McfError("train: empty training split");
    if (val_pts.cols() < 1) throw McfError("train: empty validation split");
    if (train_pts.rows() != m.spec.ambient_dim)
        throw McfError("train: dataset/model dimension mismatch");

    TrainState state;

    if (cfg.recon_epochs > 0) {
        RandomStream shuffle_rng = make_stream(cfg.seed, 500);
        std::vector<Arr*> params = m.chart_parameters();
        Optimizer opt(params, cfg);
        PhaseRunner phase{m,
                          state,
                          hooks,
                          "recon",
                          cfg.recon_epochs,
                          static_cast<int>(train_pts.cols()),
                          cfg.batch_size,
                          cfg.lr_schedule,
                          cfg.patience,
                          shuffle_rng,
                          params,
                          {},
                          {}};
        phase.step_fn = [&](const std::vector<int>& idx, int begin, int end, double lr_scale) {
            Mat batch = gather_columns(train_pts, idx, begin, end);
            ad::Tape t(true);
            ad::BindingSet b(t);
            ReconMetrics metrics;
            ad::Var loss = recon_loss(t, b, m, batch, cfg.reg_weight, &metrics);
            if (!std::isfinite(metrics.loss)) return std::numeric_limits<double>::quiet_NaN();
            t.backward(loss);
            std::vector<Arr> grads = collect_grads(b, params);
            if (!all_finite(grads)) return std::numeric_limits<double>::quiet_NaN();
            if (cfg.recon_clip_norm > 0.0) clip_gradients(grads, cfg.recon_clip_norm);
            opt.step(grads, lr_scale);
            return metrics.loss;
        };
        phase.val_fn = [&] { return validation_mse(m, val_pts); };
        state.best_recon_val = phase.run();
        state.recon_optimizer_state = opt.serialize_state();
        state.recon_steps = opt.steps();
        state.recon_rng_state = engine_state(shuffle_rng);
    }

    if (cfg.ml_epochs > 0 && !state.diverged) {
        // Charts are frozen for this whole phase, so the encoding of both
        // splits is a constant and is computed once.
        const Mat enc_train = atlas::encode(m, train_pts).latents;
        const Mat enc_val = atlas::encode(m, val_pts).latents;

        RandomStream shuffle_rng = make_stream(cfg.seed, 501);
        std::vector<Arr*> params = m.base_parameters();
        Optimizer opt(params, cfg);
        PhaseRunner phase{m,
                          state,
                          hooks,
                          "ml",
                          cfg.ml_epochs,
                          static_cast<int>(enc_train.cols()),
                          cfg.batch_size,
                          cfg.lr_schedule,
                          cfg.patience,
                          shuffle_rng,
                          params,
                          {},
                          {}};
        phase.step_fn = [&](const std::vector<int>& idx, int begin, int end, double lr_scale) {
            Mat batch = gather_columns(enc_train, idx, begin, end);
            ad::Tape t(true);
            ad::BindingSet b(t);
            ad::Var loss = ml_loss_latent(t, b, m, batch);
            const double value = t.val(loss)(0, 0);
            if (!std::isfinite(value)) return std::numeric_limits<double>::quiet_NaN();
            t.backward(loss);
            std::vector<Arr> grads = collect_grads(b, params);
            if (!all_finite(grads)) return std::numeric_limits<double>::quiet_NaN();
            if (cfg.ml_clip_norm > 0.0) clip_gradients(grads, cfg.ml_clip_norm);
            opt.step(grads, lr_scale);
            return value;
        };
        phase.val_fn = [&] { return validation_nll(m, enc_val); };
        state.best_ml_val = phase.run();
        state.ml_optimizer_state = opt.serialize_state();
        state.ml_steps = opt.steps();
        state.ml_rng_state = engine_state(shuffle_rng);
    }

    return state;
}

}  // namespace mcf::train
