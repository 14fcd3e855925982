// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcf/flows.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mcf::flow {

namespace {

// Bin floors keep the spline log-determinant bounded: every width/height is
// at least kBinFloor of the full range and every knot derivative at least
// kDerivFloor. kDerivShift centers the softplus so raw 0 maps to slope 1.
constexpr double kBinFloor = 1e-3;
constexpr double kDerivFloor = 1e-3;
const double kDerivShift = std::log(std::expm1(1.0 - kDerivFloor));
constexpr double kDiagEps = 1e-12;

using ad::BindingSet;
using ad::Tape;
using ad::Var;

}  // namespace

// --- SplineParams / reference evaluation -------------------------------------

void SplineParams::validate() const {
    const auto K = widths.size();
    if (K < 1 || heights.size() != K || derivs.size() != K + 1) {
        throw McfError("SplineParams: need K widths, K heights, K+1 derivatives");
    }
    if (!(range_bound > 0.0) || !std::isfinite(range_bound)) {
        throw McfError("SplineParams: range bound must be positive and finite");
    }
    if (!widths.allFinite() || !heights.allFinite() || !derivs.allFinite()) {
        throw McfError("SplineParams: non-finite parameter");
    }
    if (widths.minCoeff() <= 0.0 || heights.minCoeff() <= 0.0 || derivs.minCoeff() <= 0.0) {
        throw McfError("SplineParams: widths, heights and derivatives must be positive");
    }
    const double span = 2.0 * range_bound;
    if (std::abs(widths.sum() - span) > 1e-6 * span ||
        std::abs(heights.sum() - span) > 1e-6 * span) {
        throw McfError("SplineParams: widths/heights must sum to the full range");
    }
}

SplineParams SplineParams::from_raw(const Vec& raw_w, const Vec& raw_h, const Vec& raw_d,
                                    double B) {
    const auto K = raw_w.size();
    if (K < 1 || raw_h.size() != K || raw_d.size() != K - 1) {
        throw McfError("SplineParams::from_raw: want K, K, K-1 raw values");
    }
    auto bins = [B, K](const Vec& raw) {
        const Vec e = (raw.array() - raw.maxCoeff()).exp();
        const Vec sm = e / e.sum();
        return Vec(2.0 * B * (kBinFloor + (1.0 - double(K) * kBinFloor) * sm.array()));
    };
    SplineParams p;
    p.widths = bins(raw_w);
    p.heights = bins(raw_h);
    p.derivs = Vec::Ones(K + 1);
    for (Eigen::Index i = 0; i < K - 1; ++i) {
        p.derivs(i + 1) = kDerivFloor + std::log1p(std::exp(raw_d(i) + kDerivShift));
    }
    p.range_bound = B;
    p.validate();
    return p;
}

namespace {

struct BinEval {
    double y;
    double logdet;
};

BinEval bin_forward(double x, double xk, double wk, double yk, double hk, double dk, double dk1) {
    const double sk = hk / wk;
    const double xi = (x - xk) / wk;
    const double om = 1.0 - xi;
    const double q = dk1 + dk - 2.0 * sk;
    const double den = sk + q * xi * om;
    const double num = dk1 * xi * xi + 2.0 * sk * xi * om + dk * om * om;
    return {yk + hk * (sk * xi * xi + dk * xi * om) / den,
            2.0 * std::log(sk) + std::log(num) - 2.0 * std::log(den)};
}

BinEval bin_inverse(double y, double xk, double wk, double yk, double hk, double dk, double dk1) {
    const double sk = hk / wk;
    const double yr = y - yk;
    const double q = dk1 + dk - 2.0 * sk;
    const double a = hk * (sk - dk) + yr * q;
    const double b = hk * dk - yr * q;
    const double c = -sk * yr;
    const double disc = std::max(b * b - 4.0 * a * c, 0.0);
    const double xi = 2.0 * c / (-b - std::sqrt(disc));
    const double om = 1.0 - xi;
    const double den = sk + q * xi * om;
    const double num = dk1 * xi * xi + 2.0 * sk * xi * om + dk * om * om;
    return {xk + xi * wk,
            -(2.0 * std::log(sk) + std::log(num) - 2.0 * std::log(den))};
}

int find_bin(const Vec& knots, double v) {
    // Largest k with knots[k] <= v; v is already inside [-B, B].
    int k = static_cast<int>(knots.size()) - 2;
    while (k > 0 && v < knots(k)) --k;
    return k;
}

}  // namespace

std::pair<Vec, Vec> rq_spline_apply(const Vec& x, const SplineParams& params, bool inverse) {
    params.validate();
    const auto K = params.widths.size();
    const double B = params.range_bound;
    Vec xknots(K + 1), yknots(K + 1);
    xknots(0) = yknots(0) = -B;
    for (Eigen::Index k = 0; k < K; ++k) {
        xknots(k + 1) = xknots(k) + params.widths(k);
        yknots(k + 1) = yknots(k) + params.heights(k);
    }
    Vec y(x.size()), ld(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double v = x(i);
        if (std::abs(v) > B) {
            y(i) = v;
            ld(i) = 0.0;
            continue;
        }
        const int k = find_bin(inverse ? yknots : xknots, v);
        const auto e = (inverse ? bin_inverse : bin_forward)(
            v, xknots(k), params.widths(k), yknots(k), params.heights(k), params.derivs(k),
            params.derivs(k + 1));
        y(i) = e.y;
        ld(i) = e.logdet;
    }
    return {y, ld};
}

// --- tape-side spline ---------------------------------------------------------

namespace {

struct TapeSpline {
    Var y;       // 1 x M
    Var logdet;  // 1 x M
};

// vflat: 1 x M values to transform; raw: (3K-1) x M conditioner outputs per
// element. Out-of-range elements are computed on a clamped stand-in and
// routed back to the identity through select(), so no NaN can leak into the
// backward pass.
TapeSpline spline_on_tape(Tape& t, Var vflat, Var raw, int K, double B, bool inverse) {
    const auto M = t.val(vflat).cols();
    const Var raw_w = t.rows(raw, 0, K);
    const Var raw_h = t.rows(raw, K, K);
    const Var raw_d = t.rows(raw, 2 * K, K - 1);

    auto normalized_bins = [&](Var r) {
        // Softmax with a constant per-column shift (gradient-neutral).
        const Arr shift = t.val(r).colwise().maxCoeff();
        const Var e = t.exp(t.sub_brow(r, t.constant(shift)));
        const Var sm = t.div_brow(e, t.colsum(e));
        return t.add_s(t.mul_s(sm, 2.0 * B * (1.0 - K * kBinFloor)), 2.0 * B * kBinFloor);
    };
    const Var w = normalized_bins(raw_w);
    const Var h = normalized_bins(raw_h);
    const Var d_int = t.add_s(t.softplus(t.add_s(raw_d, kDerivShift)), kDerivFloor);
    const Var one = t.constant(Arr::Ones(1, M));
    const Var d_full = t.vcat(one, t.vcat(d_int, one));  // (K+1) x M

    const Var xknots = t.vcat(t.constant(Arr::Constant(1, M, -B)), t.add_s(t.cumsum_rows(w), -B));
    const Var yknots = t.vcat(t.constant(Arr::Constant(1, M, -B)), t.add_s(t.cumsum_rows(h), -B));

    const Arr& kv = t.val(inverse ? yknots : xknots);
    const Arr& vv = t.val(vflat);
    Arr inside(1, M);
    std::vector<int> lo(M), hi(M);
    for (Eigen::Index m = 0; m < M; ++m) {
        const bool in = std::abs(vv(0, m)) <= B;
        inside(0, m) = in ? 1.0 : 0.0;
        const double v = in ? vv(0, m) : 0.0;
        int k = K - 1;
        while (k > 0 && v < kv(k, m)) --k;
        lo[m] = k;
        hi[m] = k + 1;
    }

    const Var vin = t.select(inside, vflat, t.constant(Arr::Zero(1, M)));
    const Var xk = t.gather_rows_percol(xknots, lo);
    const Var yk = t.gather_rows_percol(yknots, lo);
    const Var wk = t.sub(t.gather_rows_percol(xknots, hi), xk);
    const Var hk = t.sub(t.gather_rows_percol(yknots, hi), yk);
    const Var dk = t.gather_rows_percol(d_full, lo);
    const Var dk1 = t.gather_rows_percol(d_full, hi);
    const Var sk = t.div(hk, wk);
    const Var q = t.sub(t.add(dk1, dk), t.mul_s(sk, 2.0));

    Var xi;
    Var mapped;
    if (!inverse) {
        xi = t.div(t.sub(vin, xk), wk);
    } else {
        const Var yr = t.sub(vin, yk);
        const Var a = t.add(t.mul(hk, t.sub(sk, dk)), t.mul(yr, q));
        const Var bq = t.sub(t.mul(hk, dk), t.mul(yr, q));
        const Var c = t.neg(t.mul(sk, yr));
        const Var disc = t.sub(t.square(bq), t.mul_s(t.mul(a, c), 4.0));
        // Exact arithmetic keeps disc >= 0; absorb roundoff sign flips.
        const Arr nonneg = (t.val(disc) >= 0.0).cast<double>();
        const Var root = t.sqrt(t.select(nonneg, disc, t.neg(disc)));
        xi = t.div(t.mul_s(c, 2.0), t.neg(t.add(bq, root)));
    }
    const Var om = t.sub(one, xi);
    const Var xiom = t.mul(xi, om);
    const Var den = t.add(sk, t.mul(q, xiom));
    const Var num =
        t.add(t.add(t.mul(dk1, t.square(xi)), t.mul_s(t.mul(sk, xiom), 2.0)),
              t.mul(dk, t.square(om)));
    Var ld = t.sub(t.add(t.mul_s(t.log(sk), 2.0), t.log(num)), t.mul_s(t.log(den), 2.0));
    if (!inverse) {
        mapped = t.add(yk, t.div(t.mul(hk, t.add(t.mul(sk, t.square(xi)), t.mul(dk, xiom))), den));
    } else {
        mapped = t.add(xk, t.mul(xi, wk));
        ld = t.neg(ld);
    }
    return {t.select(inside, mapped, vflat), t.select(inside, ld, t.constant(Arr::Zero(1, M)))};
}

// --- conditioner ---------------------------------------------------------------

class Conditioner {
public:
    Conditioner(int in_dim, int out_dim, const ConditionerSpec& spec, RandomStream& rng)
        : spec_(spec), in_dim_(in_dim), out_dim_(out_dim) {
        if (in_dim < 1 || out_dim < 1) throw McfError("Conditioner: bad dimensions");
        if (spec.hidden_units < 1) throw McfError("Conditioner: hidden_units must be >= 1");
        if (spec.residual_blocks == 0 && spec.hidden_layers < 1) {
            throw McfError("Conditioner: need at least one hidden layer");
        }
        if (spec.activation != "tanh" && spec.activation != "relu") {
            throw McfError("Conditioner: unknown activation '" + spec.activation + "'");
        }
        const int H = spec.hidden_units;
        auto push_layer = [this](int r, int c) {
            weights_.emplace_back(Arr::Zero(r, c));
            biases_.emplace_back(Arr::Zero(r, 1));
        };
        if (spec.residual_blocks == 0) {
            push_layer(H, in_dim);
            for (int i = 1; i < spec.hidden_layers; ++i) push_layer(H, H);
        } else {
            push_layer(H, in_dim);
            for (int i = 0; i < 2 * spec.residual_blocks; ++i) push_layer(H, H);
        }
        push_layer(out_dim, H);
        init_hidden(rng);  // final layer stays zero: identity spline at init
    }

    Var forward(Tape& t, BindingSet& b, Var in) const {
        auto lin = [&](std::size_t i, Var x) {
            return t.add_bcol(t.matmul(b.bind(weights_[i]), x), b.bind(biases_[i]));
        };
        auto act = [&](Var v) { return spec_.activation == "relu" ? t.relu(v) : t.tanh(v); };
        Var head = act(lin(0, in));
        if (spec_.residual_blocks == 0) {
            for (std::size_t i = 1; i + 1 < weights_.size(); ++i) head = act(lin(i, head));
        } else {
            for (int blk = 0; blk < spec_.residual_blocks; ++blk) {
                const std::size_t i = 1 + 2 * static_cast<std::size_t>(blk);
                head = t.add(head, lin(i + 1, act(lin(i, head))));
            }
        }
        return lin(weights_.size() - 1, head);
    }

    void collect(std::vector<Arr*>& out) {
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            out.push_back(&weights_[i]);
            out.push_back(&biases_[i]);
        }
    }

    void init_hidden(RandomStream& rng) {
        for (std::size_t i = 0; i + 1 < weights_.size(); ++i) {
            const double sd = 1.0 / std::sqrt(double(weights_[i].cols()));
            weights_[i] = sd * rng.normal_mat(static_cast<int>(weights_[i].rows()),
                                              static_cast<int>(weights_[i].cols()))
                                   .array();
            biases_[i].setZero();
        }
    }

    void randomize(RandomStream& rng, double scale) {
        init_hidden(rng);
        Arr& wf = weights_.back();
        const double sd = scale / std::sqrt(double(wf.cols()));
        wf = sd * rng.normal_mat(static_cast<int>(wf.rows()), static_cast<int>(wf.cols())).array();
        biases_.back().setZero();
    }

private:
    ConditionerSpec spec_;
    int in_dim_, out_dim_;
    mutable std::vector<Arr> weights_, biases_;
};

// --- layers --------------------------------------------------------------------

class CouplingLayer final : public Layer {
public:
    CouplingLayer(int n, std::vector<int> mask, int bins, double range_bound,
                  const ConditionerSpec& spec, RandomStream& rng)
        : n_(n), K_(bins), B_(range_bound), mask_(std::move(mask)),
          context_dim_(spec.context_dim) {
        if (static_cast<int>(mask_.size()) != n) {
            throw McfError("CouplingLayer: mask length differs from dimension");
        }
        if (bins < 2) throw McfError("CouplingLayer: need at least 2 spline bins");
        if (!(range_bound > 0.0)) throw McfError("CouplingLayer: range bound must be positive");
        for (int i = 0; i < n; ++i) {
            (mask_[i] ? id_rows_ : tr_rows_).push_back(i);
        }
        if (id_rows_.empty() || tr_rows_.empty()) {
            throw McfError("CouplingLayer: mask must keep and transform at least one coordinate");
        }
        perm_to_split_ = id_rows_;
        perm_to_split_.insert(perm_to_split_.end(), tr_rows_.begin(), tr_rows_.end());
        perm_from_split_.resize(n);
        for (int i = 0; i < n; ++i) perm_from_split_[perm_to_split_[i]] = i;
        const int T = static_cast<int>(tr_rows_.size());
        cond_ = std::make_unique<Conditioner>(static_cast<int>(id_rows_.size()) + context_dim_,
                                              (3 * K_ - 1) * T, spec, rng);
    }

    FlowResult forward(Tape& t, BindingSet& b, Var x, Var ctx) const override {
        return apply(t, b, x, ctx, false);
    }
    FlowResult inverse(Tape& t, BindingSet& b, Var y, Var ctx) const override {
        return apply(t, b, y, ctx, true);
    }
    void collect_params(std::vector<Arr*>& out) override { cond_->collect(out); }
    void randomize(RandomStream& rng, double scale) override { cond_->randomize(rng, scale); }
    std::string kind() const override { return "coupling"; }

private:
    FlowResult apply(Tape& t, BindingSet& b, Var v, Var ctx, bool inverse) const {
        const Arr& vv = t.val(v);
        if (vv.rows() != n_) throw McfError("CouplingLayer: input dimension mismatch");
        if (context_dim_ > 0) {
            if (!ctx.valid() || t.val(ctx).rows() != context_dim_ ||
                t.val(ctx).cols() != vv.cols()) {
                throw McfError("CouplingLayer: context shape mismatch");
            }
        }
        const int T = static_cast<int>(tr_rows_.size());
        const Var split = t.permute_rows(v, perm_to_split_);
        const Var v_id = t.rows(split, 0, static_cast<int>(id_rows_.size()));
        const Var v_tr = t.rows(split, static_cast<int>(id_rows_.size()), T);
        const Var cond_in = context_dim_ > 0 ? t.vcat(v_id, ctx) : v_id;
        const Var raw = cond_->forward(t, b, cond_in);          // (3K-1)*T x B
        const Var raw_flat = t.reshape_rows(raw, 3 * K_ - 1);   // (3K-1) x T*B
        const Var v_flat = t.reshape_rows(v_tr, 1);             // 1 x T*B
        const TapeSpline sp = spline_on_tape(t, v_flat, raw_flat, K_, B_, inverse);
        const Var y_tr = t.reshape_rows(sp.y, T);
        const Var ld = t.colsum(t.reshape_rows(sp.logdet, T));  // 1 x B
        const Var y = t.permute_rows(t.vcat(v_id, y_tr), perm_from_split_);
        return {y, ld};
    }

    int n_, K_;
    double B_;
    std::vector<int> mask_, id_rows_, tr_rows_, perm_to_split_, perm_from_split_;
    int context_dim_;
    std::unique_ptr<Conditioner> cond_;
};

class PermutationLayer final : public Layer {
public:
    explicit PermutationLayer(std::vector<int> perm) : perm_(std::move(perm)) {
        inv_.resize(perm_.size());
        std::vector<char> seen(perm_.size(), 0);
        for (std::size_t i = 0; i < perm_.size(); ++i) {
            const int p = perm_[i];
            if (p < 0 || p >= static_cast<int>(perm_.size()) || seen[p]) {
                throw McfError("PermutationLayer: not a permutation");
            }
            seen[p] = 1;
            inv_[p] = static_cast<int>(i);
        }
    }

    FlowResult forward(Tape& t, BindingSet&, Var x, Var) const override {
        return {t.permute_rows(x, perm_), t.constant(Arr::Zero(1, t.val(x).cols()))};
    }
    FlowResult inverse(Tape& t, BindingSet&, Var y, Var) const override {
        return {t.permute_rows(y, inv_), t.constant(Arr::Zero(1, t.val(y).cols()))};
    }
    void collect_params(std::vector<Arr*>&) override {}
    void randomize(RandomStream&, double) override {}
    std::string kind() const override { return "permutation"; }

    const std::vector<int>& perm() const { return perm_; }

private:
    std::vector<int> perm_, inv_;
};

class LuLinearLayer final : public Layer {
public:
    LuLinearLayer(int n, RandomStream& rng) : n_(n) {
        if (n < 1) throw McfError("LuLinearLayer: dimension must be >= 1");
        perm_.resize(n);
        std::iota(perm_.begin(), perm_.end(), 0);
        rng.shuffle(perm_);
        perm_inv_.resize(n);
        for (int i = 0; i < n; ++i) perm_inv_[perm_[i]] = i;
        L_ = Arr::Zero(n, n);
        U_ = Arr::Zero(n, n);
        U_.matrix().diagonal().setOnes();
        lower_mask_ = Arr::Zero(n, n);
        upper_mask_ = Arr::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i > j) lower_mask_(i, j) = 1.0;
                if (i <= j) upper_mask_(i, j) = 1.0;
            }
        }
        eye_ = Arr(Mat::Identity(n, n).array());
    }

    FlowResult forward(Tape& t, BindingSet& b, Var x, Var) const override {
        check_diag();
        const Var Lv = b.bind(L_);
        const Var Uv = b.bind(U_);
        const Var L_eff = t.add(t.mul(Lv, t.constant(lower_mask_)), t.constant(eye_));
        const Var U_eff = t.mul(Uv, t.constant(upper_mask_));
        const Var y = t.permute_rows(t.matmul(L_eff, t.matmul(U_eff, x)), perm_);
        return {y, logdet_row(t, b, t.val(x).cols(), +1.0)};
    }

    FlowResult inverse(Tape& t, BindingSet& b, Var y, Var) const override {
        check_diag();
        const Var Lv = b.bind(L_);
        const Var Uv = b.bind(U_);
        const Var z = t.trisolve_lower_unit(Lv, t.permute_rows(y, perm_inv_));
        const Var x = t.trisolve_upper(Uv, z);
        return {x, logdet_row(t, b, t.val(y).cols(), -1.0)};
    }

    void collect_params(std::vector<Arr*>& out) override {
        out.push_back(&L_);
        out.push_back(&U_);
    }

    void randomize(RandomStream& rng, double scale) override {
        const double sd = scale / std::sqrt(double(n_));
        L_ = (sd * rng.normal_mat(n_, n_).array()) * lower_mask_;
        U_ = (sd * rng.normal_mat(n_, n_).array()) * upper_mask_;
        for (int i = 0; i < n_; ++i) U_(i, i) = std::exp(0.2 * scale * rng.normal());
    }

    std::string kind() const override { return "lu_linear"; }

private:
    void check_diag() const {
        for (int i = 0; i < n_; ++i) {
            if (std::abs(U_(i, i)) < kDiagEps) {
                throw McfError("LuLinearLayer: near-zero diagonal, matrix singular");
            }
        }
    }

    Var logdet_row(Tape& t, BindingSet& b, Eigen::Index batch, double sign) const {
        std::vector<int> diag_idx(n_);
        std::iota(diag_idx.begin(), diag_idx.end(), 0);
        const Var diag = t.gather_rows_percol(b.bind(U_), diag_idx);
        const Var sld = t.mul_s(t.sum_all(t.log_abs(diag)), sign);
        return t.matmul(sld, t.constant(Arr::Ones(1, batch)));
    }

    int n_;
    std::vector<int> perm_, perm_inv_;
    mutable Arr L_, U_;
    Arr lower_mask_, upper_mask_, eye_;
};

}  // namespace

// --- FlowTransform --------------------------------------------------------------

void FlowTransform::add_coupling(const std::vector<int>& mask, int bins, double range_bound,
                                 const ConditionerSpec& spec, RandomStream& rng) {
    if (spec.context_dim != context_dim_) {
        throw McfError("FlowTransform: coupling context_dim differs from the flow's");
    }
    layers_.push_back(std::make_unique<CouplingLayer>(dim_, mask, bins, range_bound, spec, rng));
}

void FlowTransform::add_permutation(const std::vector<int>& perm) {
    if (static_cast<int>(perm.size()) != dim_) {
        throw McfError("FlowTransform: permutation length differs from dimension");
    }
    layers_.push_back(std::make_unique<PermutationLayer>(perm));
}

void FlowTransform::add_lu_linear(RandomStream& rng) {
    layers_.push_back(std::make_unique<LuLinearLayer>(dim_, rng));
}

FlowResult FlowTransform::forward(Tape& t, BindingSet& b, Var x, Var ctx) const {
    if (t.val(x).rows() != dim_) throw McfError("FlowTransform: input dimension mismatch");
    Var ld = t.constant(Arr::Zero(1, t.val(x).cols()));
    Var cur = x;
    for (const auto& layer : layers_) {
        FlowResult r = layer->forward(t, b, cur, ctx);
        cur = r.y;
        ld = t.add(ld, r.logdet);
    }
    return {cur, ld};
}

FlowResult FlowTransform::inverse(Tape& t, BindingSet& b, Var y, Var ctx) const {
    if (t.val(y).rows() != dim_) throw McfError("FlowTransform: input dimension mismatch");
    Var ld = t.constant(Arr::Zero(1, t.val(y).cols()));
    Var cur = y;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        FlowResult r = (*it)->inverse(t, b, cur, ctx);
        cur = r.y;
        ld = t.add(ld, r.logdet);
    }
    return {cur, ld};
}

namespace {

std::pair<Mat, Vec> run_values_chunk(const FlowTransform& f, const Mat& v, const Mat& ctx,
                                     bool inverse) {
    Tape t(false);
    BindingSet b(t);
    const Var vv = t.constant(v.array());
    Var cv;  // invalid when unconditioned
    if (f.context_dim() > 0) cv = t.constant(ctx.array());
    const FlowResult r = inverse ? f.inverse(t, b, vv, cv) : f.forward(t, b, vv, cv);
    return {t.val(r.y).matrix(), t.val(r.logdet).matrix().row(0).transpose()};
}

// Even a non-recording tape holds every intermediate node value until it is
// destroyed, so large batches are evaluated in column chunks to keep peak
// memory flat.
std::pair<Mat, Vec> run_values(const FlowTransform& f, const Mat& v, const Mat& ctx,
                               bool inverse) {
    if (f.context_dim() > 0 && (ctx.rows() != f.context_dim() || ctx.cols() != v.cols()))
        throw McfError("FlowTransform: context shape mismatch");

    constexpr Eigen::Index kChunk = 4096;
    if (v.cols() <= kChunk) return run_values_chunk(f, v, ctx, inverse);

    Mat y(v.rows(), v.cols());
    Vec logdet(v.cols());
    for (Eigen::Index begin = 0; begin < v.cols(); begin += kChunk) {
        const Eigen::Index n = std::min(kChunk, v.cols() - begin);
        Mat ctx_chunk = f.context_dim() > 0 ? Mat(ctx.middleCols(begin, n)) : Mat();
        auto [yc, ldc] = run_values_chunk(f, v.middleCols(begin, n), ctx_chunk, inverse);
        y.middleCols(begin, n) = yc;
        logdet.segment(begin, n) = ldc;
    }
    return {std::move(y), std::move(logdet)};
}

}  // namespace

std::pair<Mat, Vec> FlowTransform::forward_values(const Mat& x, const Mat& ctx) const {
    return run_values(*this, x, ctx, false);
}

std::pair<Mat, Vec> FlowTransform::inverse_values(const Mat& y, const Mat& ctx) const {
    return run_values(*this, y, ctx, true);
}

std::vector<Arr*> FlowTransform::parameters() {
    std::vector<Arr*> out;
    for (auto& layer : layers_) layer->collect_params(out);
    return out;
}

void FlowTransform::randomize(RandomStream& rng, double scale) {
    for (auto& layer : layers_) layer->randomize(rng, scale);
}

FlowTransform make_coupling_stack(int dim, int context_dim, int n_layers, int bins,
                                  double range_bound, const ConditionerSpec& spec,
                                  RandomStream& rng, const std::string& linear) {
    if (dim < 2) throw McfError("make_coupling_stack: couplings need dimension >= 2");
    if (n_layers < 1) throw McfError("make_coupling_stack: need at least one layer");
    if (linear != "none" && linear != "lu" && linear != "permute") {
        throw McfError("make_coupling_stack: linear must be none | lu | permute, got '" + linear +
                       "'");
    }
    ConditionerSpec s = spec;
    s.context_dim = context_dim;
    FlowTransform f(dim, context_dim);
    for (int l = 0; l < n_layers; ++l) {
        std::vector<int> mask(dim);
        for (int i = 0; i < dim; ++i) mask[i] = (i + l) % 2 == 0 ? 1 : 0;
        f.add_coupling(mask, bins, range_bound, s, rng);
        if (l + 1 < n_layers) {
            if (linear == "lu") {
                f.add_lu_linear(rng);
            } else if (linear == "permute") {
                std::vector<int> perm(static_cast<std::size_t>(dim));
                std::iota(perm.begin(), perm.end(), 0);
                rng.shuffle(perm);
                f.add_permutation(perm);
            }
        }
    }
    return f;
}

}  // namespace mcf::flow
