// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "mcf/atlas.hpp"
#include "mcf/datasets.hpp"
#include "mcf/density.hpp"

namespace mcf::eval {

/// Mean log Gaussian-KDE density of model_samples under a KDE fitted on
/// reference (ambient coordinates, shared bandwidth). Higher is better.
double kde_score(const PointBatch& model_samples, const PointBatch& reference,
                 double bandwidth);

/// Mean squared ambient L2 reconstruction error of x.
double recon_error(const atlas::Model& m, const Mat& x);

/// Negative mean manifold log-likelihood of x under the chosen volume mode.
double nll(const atlas::Model& m, const Mat& x, density::Mode mode,
           const density::DensityOptions& opts = {});

struct QuadratureResult {
    double integral = 0.0;
    int degenerate_count = 0;  // grid points with a rank-deficient Jacobian
};

/// Integrates exp(log_prob_manifold(., exact)) over a latitude-longitude
/// grid with cos(lat) * dlat * dlon cell weights; grid points are snapped
/// onto the learned manifold via reconstruct first. A normalized density on
/// a learned surface near S^2 integrates to ~1.
QuadratureResult normalization_quadrature_sphere(const atlas::Model& m, int n_lat, int n_lon);

/// Same quadrature applied to an analytic log-density on S^2 (no model, no
/// snapping); validates the grid construction itself against known
/// normalized densities.
double quadrature_sphere_analytic(const std::function<double(const Vec&)>& log_density,
                                  int n_lat, int n_lon);

/// Analytic von Mises-Fisher log-density on S^2 (normalized over the
/// sphere): kappa mu^T x + log kappa - log(4 pi sinh kappa); the kappa -> 0
/// limit is the uniform density 1 / (4 pi).
double vmf_log_density(const Vec& x, const Vec& mu, double kappa);

struct EvalOptions {
    std::vector<density::Mode> modes{density::Mode::exact, density::Mode::bound};
    double kde_bandwidth = 0.1;
    int n_model_samples = 0;  // 0: match the validation count
    int quadrature_lat = 0;   // 0 disables the normalization check
    int quadrature_lon = 0;
    std::uint64_t seed = 0;
    bool allow_degenerate = true;  // count rank-deficient points instead of raising
};

struct EvalReport {
    std::map<std::string, double> mean_nll;  // keyed by density mode name
    double mean_recon_error = 0.0;
    double kde_score = 0.0;             // fit on reference data, score model samples
    double kde_score_transposed = 0.0;  // fit on model samples, score reference data
    double normalization_integral = std::numeric_limits<double>::quiet_NaN();
    int normalization_degenerate = 0;
    int n_points = 0;
    std::uint64_t seed = 0;

    /// Finiteness of every populated entry; the quadrature fields are only
    /// checked when a quadrature ran.
    void validate(bool quadrature_ran) const;
};

/// Scores the validation split: per-mode NLL, reconstruction error, both KDE
/// directions against fresh model samples, and (when a grid is configured)
/// the sphere normalization integral.
EvalReport evaluate(const atlas::Model& m, const data::Dataset& dataset,
                    const EvalOptions& opts = {});

}  // namespace mcf::eval
