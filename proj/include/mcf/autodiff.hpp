// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "mcf/common.hpp"

namespace mcf::ad {

// Reverse-mode autodiff over batched Eigen arrays. Every array has shape
// rows x cols with cols = batch. A Tape owns the recorded graph for one
// evaluation; Var is an index into it. When the tape is not recording,
// ops compute values only and backward() is unavailable.

struct Var {
    int idx = -1;
    bool valid() const { return idx >= 0; }
};

class Tape {
public:
    explicit Tape(bool recording = true) : recording_(recording) {}

    bool recording() const { return recording_; }
    std::size_t size() const { return nodes_.size(); }

    Var constant(Arr value);
    Var leaf(Arr value);  // differentiable input / parameter
    Var scalar(double v) { return constant(Arr::Constant(1, 1, v)); }

    const Arr& val(Var v) const { return nodes_[v.idx].value; }
    const Arr& grad(Var v) const { return nodes_[v.idx].grad; }

    /// Seeds d(root)/d(root) = 1 (root must be 1x1) and propagates adjoints.
    void backward(Var root);
    /// Seeds an arbitrary adjoint at y (same shape as val(y)).
    void backward_with_seed(Var y, const Arr& seed);

    // --- elementwise, same shape ---
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);

    // --- broadcast a 1 x batch row across all rows of a ---
    Var sub_brow(Var a, Var row);
    Var mul_brow(Var a, Var row);
    Var div_brow(Var a, Var row);

    // --- scalar ---
    Var add_s(Var a, double c);
    Var mul_s(Var a, double c);

    // --- unary ---
    Var neg(Var a);
    Var exp(Var a);
    Var log(Var a);
    Var log_abs(Var a);
    Var sqrt(Var a);
    Var square(Var a);
    Var tanh(Var a);
    Var relu(Var a);
    Var softplus(Var a);

    // --- reductions ---
    Var sum_all(Var a);           // 1x1
    Var mean_all(Var a);          // 1x1
    Var colsum(Var a);            // 1 x batch
    Var cumsum_rows(Var a);       // running sum down each column

    // --- structure ---
    Var vcat(Var a, Var b);
    Var rows(Var a, int first, int count);
    Var permute_rows(Var a, const std::vector<int>& perm);
    /// Col-major reinterpret of an (r*k) x n array as r x (k*n).
    Var reshape_rows(Var a, int new_rows);
    /// out(0, j) = a(idx[j], j); adjoint scatter-adds.
    Var gather_rows_percol(Var a, std::vector<int> idx);
    /// out.col(j) = a.col(idx[j]); used for per-sample context lookup.
    Var gather_cols(Var a, std::vector<int> idx);
    /// mask ? a : b, elementwise; mask is fixed.
    Var select(const Eigen::ArrayXXd& mask01, Var a, Var b);

    // --- linear algebra ---
    Var matmul(Var w, Var x);
    Var add_bcol(Var x, Var bias);  // bias is rows x 1, broadcast over batch
    /// Solves L y = b with L unit lower triangular (strict part from l).
    Var trisolve_lower_unit(Var l, Var b);
    /// Solves U y = b with U upper triangular including diagonal.
    Var trisolve_upper(Var u, Var b);

private:
    struct Node {
        Arr value;
        Arr grad;
        bool needs_grad = false;
        std::function<void(Tape&)> backward;
    };

    Var push(Arr value, bool needs_grad, std::function<void(Tape&)> backward);
    bool wants(Var v) const { return recording_ && nodes_[v.idx].needs_grad; }
    Arr& grad_ref(int idx);

    std::vector<Node> nodes_;
    bool recording_;
};

/// Creates and caches one grad-tracked leaf per bound parameter array, and
/// remembers the binding so the caller can read gradients back after
/// backward(). Binding the same array twice returns the same Var. A frozen
/// set binds parameters as constants: values flow, gradients skip them —
/// used when differentiating w.r.t. inputs only (e.g. Jacobian extraction).
class BindingSet {
public:
    explicit BindingSet(Tape& tape, bool frozen = false) : tape_(&tape), frozen_(frozen) {}

    Var bind(Arr& param);
    /// Gradient from the last backward() w.r.t. param, or nullptr if the
    /// parameter was never bound on this tape.
    const Arr* grad_of(const Arr* param) const;

private:
    Tape* tape_;
    bool frozen_ = false;
    std::vector<std::pair<Arr*, Var>> entries_;
};

}  // namespace mcf::ad
