// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcf/eval.hpp"

#include <algorithm>
#include <cmath>

namespace mcf::eval {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

/// Mean log KDE density of queries under a Gaussian KDE over the fit batch,
/// evaluated with a numerically safe log-sum-exp over pairwise distances.
double kde_mean_log_density(const Mat& queries, const Mat& fit, double bandwidth) {
    const Eigen::Index dim = fit.rows();
    const Eigen::Index n_fit = fit.cols();
    const double inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    const double log_norm = -std::log(static_cast<double>(n_fit)) -
                            0.5 * dim * (kLog2Pi + 2.0 * std::log(bandwidth));

    const Vec fit_sq = fit.colwise().squaredNorm().transpose();
    double total = 0.0;
    constexpr Eigen::Index kChunk = 512;
    for (Eigen::Index begin = 0; begin < queries.cols(); begin += kChunk) {
        const Eigen::Index n = std::min(kChunk, queries.cols() - begin);
        const Mat q = queries.middleCols(begin, n);
        // ||q - f||^2 = ||q||^2 + ||f||^2 - 2 q.f, columns = queries
        Mat d2 = (-2.0 * fit.transpose() * q).colwise() + fit_sq;
        d2.array().rowwise() += q.colwise().squaredNorm().array();
        Arr expo = (-inv_two_h2) * d2.cwiseMax(0.0).array();
        for (Eigen::Index j = 0; j < n; ++j) {
            const double m = expo.col(j).maxCoeff();
            total += m + std::log((expo.col(j) - m).exp().sum()) + log_norm;
        }
    }
    return total / static_cast<double>(queries.cols());
}

}  // namespace

double kde_score(const PointBatch& model_samples, const PointBatch& reference,
                 double bandwidth) {
    if (model_samples.empty() || reference.empty())
        throw McfError("kde_score: empty point batch");
    if (model_samples.dim() != reference.dim())
        throw McfError("kde_score: ambient dimension mismatch");
    if (!(bandwidth > 0.0)) throw McfError("kde_score: bandwidth must be positive");
    return kde_mean_log_density(model_samples.points, reference.points, bandwidth);
}

double recon_error(const atlas::Model& m, const Mat& x) {
    if (x.cols() < 1) throw McfError("recon_error: empty batch");
    Mat rec = atlas::reconstruct(m, x);
    return (rec - x).colwise().squaredNorm().mean();
}

double nll(const atlas::Model& m, const Mat& x, density::Mode mode,
           const density::DensityOptions& opts) {
    density::DensityResult res = density::log_prob_manifold(m, x, mode, opts);
    return -res.log_prob.mean();
}

namespace {

Mat sphere_grid(int n_lat, int n_lon, Vec* cell_weight) {
    const double dlat = M_PI / n_lat;
    const double dlon = 2.0 * M_PI / n_lon;
    Mat grid(3, static_cast<Eigen::Index>(n_lat) * n_lon);
    if (cell_weight) cell_weight->resize(grid.cols());
    for (int i = 0; i < n_lat; ++i) {
        const double lat = -0.5 * M_PI + (i + 0.5) * dlat;
        for (int j = 0; j < n_lon; ++j) {
            const double lon = -M_PI + (j + 0.5) * dlon;
            const Eigen::Index c = static_cast<Eigen::Index>(i) * n_lon + j;
            grid(0, c) = std::cos(lon) * std::cos(lat);
            grid(1, c) = std::sin(lon) * std::cos(lat);
            grid(2, c) = std::sin(lat);
            if (cell_weight) (*cell_weight)(c) = std::cos(lat) * dlat * dlon;
        }
    }
    return grid;
}

}  // namespace

QuadratureResult normalization_quadrature_sphere(const atlas::Model& m, int n_lat, int n_lon) {
    if (m.spec.ambient_dim != 3 || m.spec.latent_dim != 2)
        throw McfError("normalization_quadrature_sphere: needs an S^2 model (D=3, d=2)");
    if (n_lat < 2 || n_lon < 2) throw McfError("normalization_quadrature_sphere: grid too small");

    Vec weight;
    Mat grid = sphere_grid(n_lat, n_lon, &weight);
    Mat snapped = atlas::reconstruct(m, grid);

    density::DensityOptions opts;
    opts.allow_degenerate = true;
    density::DensityResult dens =
        density::log_prob_manifold(m, snapped, density::Mode::exact, opts);

    QuadratureResult result;
    result.degenerate_count = dens.degenerate_count;
    // exp(-inf) = 0 drops degenerate cells from the sum on its own.
    result.integral = (dens.log_prob.array().exp() * weight.array()).sum();
    return result;
}

double quadrature_sphere_analytic(const std::function<double(const Vec&)>& log_density,
                                  int n_lat, int n_lon) {
    if (n_lat < 2 || n_lon < 2) throw McfError("quadrature_sphere_analytic: grid too small");
    Vec weight;
    Mat grid = sphere_grid(n_lat, n_lon, &weight);
    double integral = 0.0;
    for (Eigen::Index c = 0; c < grid.cols(); ++c)
        integral += std::exp(log_density(grid.col(c))) * weight(c);
    return integral;
}

double vmf_log_density(const Vec& x, const Vec& mu, double kappa) {
    if (x.size() != 3 || mu.size() != 3) throw McfError("vmf_log_density: S^2 points required");
    if (kappa < 0.0) throw McfError("vmf_log_density: negative concentration");
    constexpr double kLog4Pi = 2.5310242469692907;  // log(4 pi)
    if (kappa < 1e-12) return -kLog4Pi;
    // log C = log kappa - log(4 pi sinh kappa), written in exp form to stay
    // finite at large kappa: log(sinh k) = k + log1p(-exp(-2k)) - log 2.
    const double log_sinh = kappa + std::log1p(-std::exp(-2.0 * kappa)) - std::log(2.0);
    return kappa * mu.dot(x) + std::log(kappa) - kLog4Pi - log_sinh;
}

void EvalReport::validate(bool quadrature_ran) const {
    for (const auto& [mode, value] : mean_nll)
        if (!std::isfinite(value)) throw McfError("EvalReport: non-finite NLL for mode " + mode);
    if (!std::isfinite(mean_recon_error)) throw McfError("EvalReport: non-finite recon error");
    if (!std::isfinite(kde_score) || !std::isfinite(kde_score_transposed))
        throw McfError("EvalReport: non-finite KDE score");
    if (quadrature_ran) {
        if (!std::isfinite(normalization_integral) || normalization_integral <= 0.0)
            throw McfError("EvalReport: normalization integral must be finite and positive");
    }
}

EvalReport evaluate(const atlas::Model& m, const data::Dataset& dataset,
                    const EvalOptions& opts) {
    const Mat& val = dataset.val.points;
    if (val.cols() < 1) throw McfError("evaluate: empty validation split");
    if (val.rows() != m.spec.ambient_dim) throw McfError("evaluate: dimension mismatch");

    EvalReport report;
    report.n_points = static_cast<int>(val.cols());
    report.seed = opts.seed;

    density::DensityOptions dopts;
    dopts.seed = opts.seed;
    dopts.allow_degenerate = opts.allow_degenerate;
    for (density::Mode mode : opts.modes)
        report.mean_nll[density::to_string(mode)] = nll(m, val, mode, dopts);

    report.mean_recon_error = recon_error(m, val);

    const int n_samples =
        opts.n_model_samples > 0 ? opts.n_model_samples : static_cast<int>(val.cols());
    PointBatch samples = atlas::sample(m, n_samples, opts.seed);
    report.kde_score = kde_score(samples, dataset.val, opts.kde_bandwidth);
    report.kde_score_transposed = kde_score(dataset.val, samples, opts.kde_bandwidth);

    const bool quadrature_ran = opts.quadrature_lat > 0 && opts.quadrature_lon > 0;
    if (quadrature_ran) {
        QuadratureResult quad =
            normalization_quadrature_sphere(m, opts.quadrature_lat, opts.quadrature_lon);
        report.normalization_integral = quad.integral;
        report.normalization_degenerate = quad.degenerate_count;
    }

    report.validate(quadrature_ran);
    return report;
}

}  // namespace mcf::eval
