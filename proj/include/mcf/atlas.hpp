// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "mcf/flows.hpp"

namespace mcf::atlas {

/// Architecture of a multi-chart model: an ambient chart flow on R^D
/// conditioned on per-chart index embeddings, plus a latent base flow on R^d.
struct ModelSpec {
    int ambient_dim = 3;  // D
    int latent_dim = 2;   // d
    int n_charts = 4;     // N
    int index_dim = 2;    // d_A, the chart-index embedding width

    int chart_layers = 4;
    int chart_bins = 8;
    double chart_range = 3.0;
    flow::ConditionerSpec chart_conditioner;

    int base_layers = 4;
    int base_bins = 8;
    double base_range = 3.0;
    flow::ConditionerSpec base_conditioner;

    std::string linear = "none";  // none | lu | permute, between couplings

    void validate() const;
};

/// Chart centers are drawn once from N(0, I_d) and frozen; index embeddings
/// and both flows are trainable (phase 1: chart flow + embeddings, phase 2:
/// base flow).
struct Model {
    ModelSpec spec;
    Mat centers;     // d x N, frozen
    Arr embeddings;  // d_A x N
    flow::FlowTransform chart_flow;  // R^D with context_dim = d_A
    flow::FlowTransform base_flow;   // R^d, unconditioned

    Model(const ModelSpec& s, std::uint64_t seed);

    /// Phase-1 parameters: index embeddings first, then chart-flow arrays.
    std::vector<Arr*> chart_parameters();
    /// Phase-2 parameters: base-flow arrays.
    std::vector<Arr*> base_parameters();
    std::vector<Arr*> all_parameters();
};

/// Appends zero rows so the latent batch lives in R^D.
Mat pad(const Mat& u, int ambient_dim);
ad::Var pad_on_tape(ad::Tape& t, ad::Var u, int ambient_dim);

/// Nearest chart center by squared Euclidean distance; ties break to the
/// smallest index.
std::vector<int> assign_chart(const Mat& centers, const Mat& u);

/// Per-sample context columns a_k. The bound variant tracks gradients into
/// the embeddings; the const variant does not.
Mat context_for(const Model& m, const std::vector<int>& chart);
ad::Var context_const(ad::Tape& t, const Model& m, const std::vector<int>& chart);
ad::Var context_bound(ad::Tape& t, ad::BindingSet& b, Model& m, const std::vector<int>& chart);

struct EncodeResult {
    Mat latents;             // d x n, latent of the selected chart
    std::vector<int> chart;  // selected chart per point
    Vec residual;            // L2 norm of the D-d padded coordinates
};

/// Sweeps all charts (z_i = chart_flow.forward(x, a_i)) and keeps the chart
/// whose latent head lands closest to its own center.
EncodeResult encode(const Model& m, const Mat& x);
/// Same map but through caller-fixed charts.
std::pair<Mat, Vec> encode_chart(const Model& m, const Mat& x, const std::vector<int>& chart);

/// x = chart_flow.inverse(pad(u), a_k) with k = assign_chart(u).
Mat decode(const Model& m, const Mat& u);
Mat decode_chart(const Model& m, const Mat& u, const std::vector<int>& chart);

/// Projection onto the learned manifold: encode, zero the off-manifold
/// coordinates, decode through the same chart.
Mat reconstruct(const Model& m, const Mat& x);

/// Generative process: latent normal draws through h^{-1}, then decode.
PointBatch sample(const Model& m, int n, std::uint64_t seed);

}  // namespace mcf::atlas
