// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcf/atlas.hpp"

#include <cmath>
#include <limits>

namespace mcf::atlas {

void ModelSpec::validate() const {
    if (latent_dim < 1 || ambient_dim <= latent_dim) {
        throw McfError("ModelSpec: need 1 <= latent_dim < ambient_dim");
    }
    if (n_charts < 1) throw McfError("ModelSpec: n_charts must be >= 1");
    if (index_dim < 1) throw McfError("ModelSpec: index_dim must be >= 1");
    if (chart_layers < 1 || base_layers < 1) throw McfError("ModelSpec: layer counts must be >= 1");
    if (chart_bins < 2 || base_bins < 2) throw McfError("ModelSpec: bins must be >= 2");
    if (!(chart_range > 0.0) || !(base_range > 0.0)) {
        throw McfError("ModelSpec: spline ranges must be positive");
    }
    if (linear != "none" && linear != "lu" && linear != "permute") {
        throw McfError("ModelSpec: linear must be none | lu | permute, got '" + linear + "'");
    }
    if (latent_dim < 2) {
        throw McfError("ModelSpec: couplings on the base flow need latent_dim >= 2");
    }
}

namespace {

// Dedicated stream ids keep every random draw of the model reproducible and
// independent: 100 centers, 101 embeddings, 102/103 the two flows.
flow::FlowTransform build_chart_flow(const ModelSpec& s, std::uint64_t seed) {
    auto rng = make_stream(seed, 102);
    return flow::make_coupling_stack(s.ambient_dim, s.index_dim, s.chart_layers, s.chart_bins,
                                     s.chart_range, s.chart_conditioner, rng, s.linear);
}

flow::FlowTransform build_base_flow(const ModelSpec& s, std::uint64_t seed) {
    auto rng = make_stream(seed, 103);
    return flow::make_coupling_stack(s.latent_dim, 0, s.base_layers, s.base_bins, s.base_range,
                                     s.base_conditioner, rng, s.linear);
}

}  // namespace

Model::Model(const ModelSpec& s, std::uint64_t seed)
    : spec((s.validate(), s)),
      chart_flow(build_chart_flow(s, seed)),
      base_flow(build_base_flow(s, seed)) {
    auto center_rng = make_stream(seed, 100);
    centers = center_rng.normal_mat(s.latent_dim, s.n_charts);
    for (int i = 0; i < s.n_charts; ++i) {
        for (int j = i + 1; j < s.n_charts; ++j) {
            if ((centers.col(i) - centers.col(j)).norm() < 1e-8) {
                throw McfError("Model: chart centers collided; use a different seed");
            }
        }
    }
    auto emb_rng = make_stream(seed, 101);
    embeddings = 0.1 * emb_rng.normal_mat(s.index_dim, s.n_charts).array();
}

std::vector<Arr*> Model::chart_parameters() {
    std::vector<Arr*> out{&embeddings};
    for (Arr* p : chart_flow.parameters()) out.push_back(p);
    return out;
}

std::vector<Arr*> Model::base_parameters() { return base_flow.parameters(); }

std::vector<Arr*> Model::all_parameters() {
    auto out = chart_parameters();
    for (Arr* p : base_parameters()) out.push_back(p);
    return out;
}

Mat pad(const Mat& u, int ambient_dim) {
    if (u.rows() > ambient_dim) throw McfError("pad: latent dimension exceeds ambient");
    Mat out = Mat::Zero(ambient_dim, u.cols());
    out.topRows(u.rows()) = u;
    return out;
}

ad::Var pad_on_tape(ad::Tape& t, ad::Var u, int ambient_dim) {
    const Arr& uv = t.val(u);
    if (uv.rows() > ambient_dim) throw McfError("pad_on_tape: latent dimension exceeds ambient");
    if (uv.rows() == ambient_dim) return u;
    return t.vcat(u, t.constant(Arr::Zero(ambient_dim - uv.rows(), uv.cols())));
}

std::vector<int> assign_chart(const Mat& centers, const Mat& u) {
    if (centers.rows() != u.rows()) throw McfError("assign_chart: dimension mismatch");
    std::vector<int> out(static_cast<std::size_t>(u.cols()));
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (Eigen::Index i = 0; i < centers.cols(); ++i) {
            const double d2 = (u.col(j) - centers.col(i)).squaredNorm();
            if (d2 < best) {  // strict: ties keep the smallest index
                best = d2;
                arg = static_cast<int>(i);
            }
        }
        out[static_cast<std::size_t>(j)] = arg;
    }
    return out;
}

Mat context_for(const Model& m, const std::vector<int>& chart) {
    Mat out(m.spec.index_dim, static_cast<Eigen::Index>(chart.size()));
    for (std::size_t j = 0; j < chart.size(); ++j) {
        if (chart[j] < 0 || chart[j] >= m.spec.n_charts) {
            throw McfError("context_for: chart index out of range");
        }
        out.col(static_cast<Eigen::Index>(j)) = m.embeddings.col(chart[j]).matrix();
    }
    return out;
}

ad::Var context_const(ad::Tape& t, const Model& m, const std::vector<int>& chart) {
    return t.constant(context_for(m, chart).array());
}

ad::Var context_bound(ad::Tape& t, ad::BindingSet& b, Model& m, const std::vector<int>& chart) {
    for (const int k : chart) {
        if (k < 0 || k >= m.spec.n_charts) throw McfError("context_bound: chart out of range");
    }
    return t.gather_cols(b.bind(m.embeddings), chart);
}

EncodeResult encode(const Model& m, const Mat& x) {
    if (x.rows() != m.spec.ambient_dim) throw McfError("encode: ambient dimension mismatch");
    const auto n = x.cols();
    const int d = m.spec.latent_dim;
    EncodeResult res;
    // Zero-init keeps the result deterministic even if a pathological model
    // (non-finite parameters) produces no usable distance for some column.
    res.latents = Mat::Zero(d, n);
    res.chart.assign(static_cast<std::size_t>(n), 0);
    res.residual = Vec::Zero(n);
    Vec best = Vec::Constant(n, std::numeric_limits<double>::infinity());
    for (int i = 0; i < m.spec.n_charts; ++i) {
        const Mat ctx = m.embeddings.col(i).matrix().replicate(1, n);
        const auto [z, ld] = m.chart_flow.forward_values(x, ctx);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double d2 = (z.col(j).head(d) - m.centers.col(i)).squaredNorm();
            if (d2 < best(j)) {
                best(j) = d2;
                res.chart[static_cast<std::size_t>(j)] = i;
                res.latents.col(j) = z.col(j).head(d);
                res.residual(j) = z.col(j).tail(x.rows() - d).norm();
            }
        }
    }
    return res;
}

std::pair<Mat, Vec> encode_chart(const Model& m, const Mat& x, const std::vector<int>& chart) {
    if (x.rows() != m.spec.ambient_dim) throw McfError("encode_chart: ambient dimension mismatch");
    if (chart.size() != static_cast<std::size_t>(x.cols())) {
        throw McfError("encode_chart: one chart index per point required");
    }
    const auto [z, ld] = m.chart_flow.forward_values(x, context_for(m, chart));
    const int d = m.spec.latent_dim;
    Vec residual(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        residual(j) = z.col(j).tail(x.rows() - d).norm();
    }
    return {z.topRows(d), residual};
}

Mat decode_chart(const Model& m, const Mat& u, const std::vector<int>& chart) {
    if (u.rows() != m.spec.latent_dim) throw McfError("decode_chart: latent dimension mismatch");
    return m.chart_flow.inverse_values(pad(u, m.spec.ambient_dim), context_for(m, chart)).first;
}

Mat decode(const Model& m, const Mat& u) {
    return decode_chart(m, u, assign_chart(m.centers, u));
}

Mat reconstruct(const Model& m, const Mat& x) {
    const EncodeResult e = encode(m, x);
    return decode_chart(m, e.latents, e.chart);
}

PointBatch sample(const Model& m, int n, std::uint64_t seed) {
    if (n < 0) throw McfError("sample: negative count");
    auto rng = make_stream(seed, 0);
    const Mat z = rng.normal_mat(m.spec.latent_dim, n);
    const Mat u = m.base_flow.inverse_values(z).first;
    return PointBatch{decode(m, u)};
}

}  // namespace mcf::atlas
