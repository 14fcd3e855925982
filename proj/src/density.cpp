// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcf/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace mcf::density {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

/// Fills out[begin, end) with decode Jacobians. Each point occupies D
/// adjacent replica columns of one tape, so a single backward pass with a
/// block-identity seed recovers one ambient row per replica; the gradient at
/// the latent leaf is then J^T, point by point. Valid because every tape
/// operation in the decode path treats batch columns independently.
void jacobian_chunk(const atlas::Model& m, const Mat& latents, const std::vector<int>& chart,
                    int begin, int end, std::vector<ChartJacobian>& out) {
    const int D = m.spec.ambient_dim;
    const int d = m.spec.latent_dim;
    const int cols = (end - begin) * D;

    Arr u_rep(d, cols);
    Arr ctx_rep(m.spec.index_dim, cols);
    for (int c = 0; c < cols; ++c) {
        const int p = begin + c / D;
        u_rep.col(c) = latents.col(p).array();
        ctx_rep.col(c) = m.embeddings.col(chart[p]);
    }

    ad::Tape tape(true);
    ad::BindingSet binds(tape, /*frozen=*/true);
    ad::Var u = tape.leaf(u_rep);
    ad::Var padded = atlas::pad_on_tape(tape, u, D);
    ad::Var ctx = tape.constant(std::move(ctx_rep));
    // Parameters enter as constants through the frozen BindingSet, so the
    // backward pass only propagates toward the latent leaf.
    flow::FlowResult res = m.chart_flow.inverse(tape, binds, padded, ctx);

    Arr seed = Arr::Zero(D, cols);
    for (int c = 0; c < cols; ++c) seed(c % D, c) = 1.0;
    tape.backward_with_seed(res.y, seed);

    const Arr& g = tape.grad(u);  // d x cols; columns [p*D, (p+1)*D) hold J^T of point p
    for (int p = begin; p < end; ++p) {
        ChartJacobian cj;
        cj.chart = chart[p];
        cj.J = g.block(0, (p - begin) * D, d, D).matrix().transpose();
        Eigen::JacobiSVD<Mat> svd(cj.J);
        cj.smallest_singular = svd.singularValues().minCoeff();
        cj.degenerate = cj.smallest_singular < kDegenerateSingular;
        out[p] = std::move(cj);
    }
}

}  // namespace

ChartJacobian chart_jacobian(const atlas::Model& m, const Vec& u, int chart) {
    if (!u.allFinite()) throw McfError("chart_jacobian: non-finite latent point");
    if (u.size() != m.spec.latent_dim) throw McfError("chart_jacobian: latent dimension mismatch");
    if (chart < 0 || chart >= m.spec.n_charts) throw McfError("chart_jacobian: invalid chart index");
    std::vector<ChartJacobian> out(1);
    jacobian_chunk(m, Mat(u), {chart}, 0, 1, out);
    return std::move(out[0]);
}

std::vector<ChartJacobian> chart_jacobians(const atlas::Model& m, const Mat& latents,
                                           const std::vector<int>& chart) {
    const int n = static_cast<int>(latents.cols());
    if (static_cast<int>(chart.size()) != n)
        throw McfError("chart_jacobians: chart list size mismatch");
    if (!latents.allFinite()) throw McfError("chart_jacobians: non-finite latent batch");
    for (int k : chart)
        if (k < 0 || k >= m.spec.n_charts) throw McfError("chart_jacobians: invalid chart index");

    std::vector<ChartJacobian> out(n);
    if (n == 0) return out;

    // ~1024 replica columns per tape keeps memory flat regardless of batch size.
    const int per_chunk = std::max(1, 1024 / m.spec.ambient_dim);
    const int n_chunks = (n + per_chunk - 1) / per_chunk;
    parallel_for(n_chunks, [&](int c) {
        const int begin = c * per_chunk;
        const int end = std::min(n, begin + per_chunk);
        jacobian_chunk(m, latents, chart, begin, end, out);
    });
    return out;
}

Vec log_prob_latent(const atlas::Model& m, const Mat& latents) {
    if (latents.rows() != m.spec.latent_dim)
        throw McfError("log_prob_latent: latent dimension mismatch");
    if (!latents.allFinite()) throw McfError("log_prob_latent: non-finite latent batch");
    auto [z, logdet] = m.base_flow.forward_values(latents);
    const double norm_const = -0.5 * m.spec.latent_dim * kLog2Pi;
    Vec lp(latents.cols());
    for (Eigen::Index i = 0; i < latents.cols(); ++i)
        lp(i) = norm_const - 0.5 * z.col(i).squaredNorm() + logdet(i);
    return lp;
}

double logdet_metric_exact(const ChartJacobian& cj) {
    Eigen::JacobiSVD<Mat> svd(cj.J);
    const Vec& sv = svd.singularValues();
    const double smallest = sv.minCoeff();
    if (smallest < kDegenerateSingular) {
        std::ostringstream msg;
        msg << "logdet_metric_exact: rank-deficient Jacobian, smallest singular value "
            << smallest;
        throw McfError(msg.str());
    }
    return sv.array().log().sum();  // = 1/2 sum_i log s_i^2
}

double logdet_metric_bound(const ChartJacobian& cj) {
    const double frob2 = cj.J.squaredNorm();
    if (frob2 <= 0.0) throw McfError("logdet_metric_bound: zero Jacobian");
    return 0.5 * std::log(frob2);
}

HutchinsonResult hutchinson_trace(const std::function<Vec(const Vec&)>& jvp, int dim,
                                  int n_probes, RandomStream& rng) {
    if (n_probes < 1) throw McfError("hutchinson_trace: need at least one probe");
    if (dim < 1) throw McfError("hutchinson_trace: probe dimension must be positive");
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < n_probes; ++i) {
        const Vec v = rng.normal_vec(dim);
        const double q = jvp(v).squaredNorm();  // v^T J^T J v
        sum += q;
        sum_sq += q * q;
    }
    HutchinsonResult r;
    r.estimate = sum / n_probes;
    if (n_probes > 1) {
        const double var = std::max(0.0, (sum_sq - sum * sum / n_probes) / (n_probes - 1));
        r.std_error = std::sqrt(var / n_probes);
    }
    return r;
}

HutchinsonResult hutchinson_trace(const Mat& J, int n_probes, RandomStream& rng) {
    return hutchinson_trace([&J](const Vec& v) { return Vec(J * v); },
                            static_cast<int>(J.cols()), n_probes, rng);
}

Mode mode_from_string(const std::string& name) {
    if (name == "exact") return Mode::exact;
    if (name == "bound") return Mode::bound;
    if (name == "hutchinson_bound") return Mode::hutchinson_bound;
    if (name == "coarse") return Mode::coarse;
    throw McfError("unknown density mode: " + name +
                   " (expected exact | bound | hutchinson_bound | coarse)");
}

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::exact: return "exact";
        case Mode::bound: return "bound";
        case Mode::hutchinson_bound: return "hutchinson_bound";
        case Mode::coarse: return "coarse";
    }
    throw McfError("to_string: invalid density mode");
}

DensityResult log_prob_manifold(const atlas::Model& m, const Mat& x, Mode mode,
                                const DensityOptions& opts) {
    if (x.rows() != m.spec.ambient_dim)
        throw McfError("log_prob_manifold: ambient dimension mismatch");
    if (!x.allFinite()) throw McfError("log_prob_manifold: non-finite input batch");

    atlas::EncodeResult enc = atlas::encode(m, x);
    const int n = static_cast<int>(x.cols());

    DensityResult result;
    result.chart = enc.chart;
    result.log_prob = log_prob_latent(m, enc.latents);

    if (mode == Mode::coarse) {
        // Volume correction of the full ambient map at pad(u): the inverse
        // pass reports log|det d decode / d pad(u)| directly.
        Mat padded = atlas::pad(enc.latents, m.spec.ambient_dim);
        Mat ctx = atlas::context_for(m, enc.chart);
        auto [y, logdet] = m.chart_flow.inverse_values(padded, ctx);
        result.log_prob -= logdet;
        return result;
    }

    std::vector<ChartJacobian> jac = chart_jacobians(m, enc.latents, enc.chart);
    for (int i = 0; i < n; ++i) {
        switch (mode) {
            case Mode::exact:
                if (jac[i].degenerate) {
                    if (!opts.allow_degenerate) {
                        std::ostringstream msg;
                        msg << "log_prob_manifold: degenerate Jacobian at point " << i
                            << " (smallest singular value " << jac[i].smallest_singular << ")";
                        throw McfError(msg.str());
                    }
                    ++result.degenerate_count;
                    result.log_prob(i) = -std::numeric_limits<double>::infinity();
                } else {
                    result.log_prob(i) -= logdet_metric_exact(jac[i]);
                }
                break;
            case Mode::bound:
                result.log_prob(i) -= logdet_metric_bound(jac[i]);
                break;
            case Mode::hutchinson_bound: {
                RandomStream probes = make_stream(opts.seed, 200 + static_cast<std::uint64_t>(i));
                HutchinsonResult h = hutchinson_trace(jac[i].J, opts.hutchinson_probes, probes);
                if (h.estimate <= 0.0)
                    throw McfError("log_prob_manifold: non-positive Hutchinson trace estimate");
                result.log_prob(i) -= 0.5 * std::log(h.estimate);
                break;
            }
            case Mode::coarse: break;  // handled above
        }
    }
    return result;
}

}  // namespace mcf::density
