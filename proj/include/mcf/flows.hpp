// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mcf/autodiff.hpp"
#include "mcf/common.hpp"

namespace mcf::flow {

/// One normalized rational-quadratic spline: K bin widths/heights summing to
/// 2B and K+1 positive knot derivatives. The map is the identity (logdet 0)
/// outside [-B, B].
struct SplineParams {
    Vec widths;
    Vec heights;
    Vec derivs;
    double range_bound = 3.0;

    int bins() const { return static_cast<int>(widths.size()); }
    void validate() const;  // throws McfError on any invariant violation
    /// Applies the same floored softmax/softplus normalization the coupling
    /// layers use; raw zeros give the identity spline.
    static SplineParams from_raw(const Vec& raw_w, const Vec& raw_h, const Vec& raw_d, double B);
};

/// Plain-double reference evaluation of one spline on a batch of scalars.
/// Returns y and the per-element log |dy/dx| (log |dx/dy| when inverse).
std::pair<Vec, Vec> rq_spline_apply(const Vec& x, const SplineParams& params, bool inverse);

/// Conditioner architecture: a plain MLP when residual_blocks == 0, else an
/// entry layer followed by that many residual blocks. context_dim > 0 means
/// the conditioner input is (masked coords ++ context).
struct ConditionerSpec {
    int hidden_layers = 2;
    int hidden_units = 64;
    std::string activation = "tanh";  // tanh | relu
    int residual_blocks = 0;
    int context_dim = 0;
};

struct FlowResult {
    ad::Var y;
    ad::Var logdet;  // 1 x batch
};

/// One invertible building block. forward/inverse record onto the caller's
/// tape; parameters are bound through the caller's BindingSet so gradients
/// can be read back after backward().
class Layer {
public:
    virtual ~Layer() = default;
    virtual FlowResult forward(ad::Tape& t, ad::BindingSet& b, ad::Var x, ad::Var ctx) const = 0;
    virtual FlowResult inverse(ad::Tape& t, ad::BindingSet& b, ad::Var y, ad::Var ctx) const = 0;
    virtual void collect_params(std::vector<Arr*>& out) = 0;
    virtual void randomize(RandomStream& rng, double scale) = 0;
    virtual std::string kind() const = 0;
};

/// Composition of coupling / permutation / LU-linear layers on R^n with an
/// optional conditioning context; exact log-determinants throughout.
class FlowTransform {
public:
    FlowTransform(int dim, int context_dim) : dim_(dim), context_dim_(context_dim) {
        if (dim < 1) throw McfError("FlowTransform: dimension must be >= 1");
        if (context_dim < 0) throw McfError("FlowTransform: negative context_dim");
    }

    /// mask[i] == 1 marks pass-through coordinates feeding the conditioner.
    void add_coupling(const std::vector<int>& mask, int bins, double range_bound,
                      const ConditionerSpec& spec, RandomStream& rng);
    void add_permutation(const std::vector<int>& perm);
    void add_lu_linear(RandomStream& rng);

    FlowResult forward(ad::Tape& t, ad::BindingSet& b, ad::Var x, ad::Var ctx) const;
    FlowResult inverse(ad::Tape& t, ad::BindingSet& b, ad::Var y, ad::Var ctx) const;

    /// Value-only evaluation on a throwaway non-recording tape.
    std::pair<Mat, Vec> forward_values(const Mat& x, const Mat& ctx = Mat()) const;
    std::pair<Mat, Vec> inverse_values(const Mat& y, const Mat& ctx = Mat()) const;

    /// Stable order: layer by layer, each layer's arrays in creation order.
    std::vector<Arr*> parameters();
    void randomize(RandomStream& rng, double scale);

    int dim() const { return dim_; }
    int context_dim() const { return context_dim_; }
    int layer_count() const { return static_cast<int>(layers_.size()); }
    const Layer& layer(int i) const { return *layers_.at(i); }

private:
    int dim_;
    int context_dim_;
    std::vector<std::unique_ptr<Layer>> layers_;
};

/// Standard stack: n_layers couplings with strictly alternating masks,
/// optionally separated by linear layers ("none", "lu" for LU-decomposed
/// linear maps, "permute" for random feature permutations).
FlowTransform make_coupling_stack(int dim, int context_dim, int n_layers, int bins,
                                  double range_bound, const ConditionerSpec& spec,
                                  RandomStream& rng, const std::string& linear = "none");

}  // namespace mcf::flow
