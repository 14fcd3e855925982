// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mcf/atlas.hpp"
#include "mcf/datasets.hpp"
#include "mcf/eval.hpp"

using namespace mcf;
using atlas::Model;
using atlas::ModelSpec;

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

ModelSpec sphere_spec() {
    ModelSpec spec;
    spec.ambient_dim = 3;
    spec.latent_dim = 2;
    spec.n_charts = 4;
    spec.index_dim = 2;
    return spec;
}

/// Naive double-sum Gaussian KDE oracle.
double kde_oracle(const Mat& queries, const Mat& fit, double h) {
    const double dim = static_cast<double>(fit.rows());
    double total = 0.0;
    for (Eigen::Index i = 0; i < queries.cols(); ++i) {
        double dens = 0.0;
        for (Eigen::Index j = 0; j < fit.cols(); ++j) {
            const double d2 = (queries.col(i) - fit.col(j)).squaredNorm();
            dens += std::exp(-d2 / (2.0 * h * h));
        }
        dens /= fit.cols() * std::pow(2.0 * M_PI * h * h, dim / 2.0);
        total += std::log(dens);
    }
    return total / queries.cols();
}

}  // namespace

TEST_CASE("KDE score matches a direct double-sum oracle") {
    PointBatch ref = data::sample_wrapped_normals_sphere(200, data::default_sphere_modes(), 7);
    PointBatch mod = data::sample_wrapped_normals_sphere(150, data::default_sphere_modes(), 8);

    SUBCASE("cross scoring") {
        double fast = eval::kde_score(mod, ref, 0.1);
        double slow = kde_oracle(mod.points, ref.points, 0.1);
        CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
    }

    SUBCASE("self scoring is the degenerate case of the same formula") {
        double fast = eval::kde_score(ref, ref, 0.1);
        double slow = kde_oracle(ref.points, ref.points, 0.1);
        CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
    }

    SUBCASE("single fit point gives the closed-form Gaussian log-density") {
        PointBatch one;
        one.points = Mat::Zero(3, 1);
        PointBatch query;
        query.points = Mat::Zero(3, 1);
        query.points(0, 0) = 0.25;
        const double h = 0.1;
        double expect = -1.5 * (kLog2Pi + 2.0 * std::log(h)) - 0.25 * 0.25 / (2.0 * h * h);
        CHECK(eval::kde_score(query, one, h) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("KDE score is order-invariant and deterministic") {
    PointBatch ref = data::sample_wrapped_normals_sphere(128, data::default_sphere_modes(), 17);
    PointBatch mod = data::sample_wrapped_normals_sphere(64, data::default_sphere_modes(), 18);
    const double base = eval::kde_score(mod, ref, 0.1);
    CHECK(eval::kde_score(mod, ref, 0.1) == base);  // deterministic

    std::vector<int> perm(static_cast<std::size_t>(mod.count()));
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    PointBatch shuffled;
    shuffled.points = Mat(3, mod.count());
    for (int i = 0; i < mod.count(); ++i) shuffled.points.col(i) = mod.points.col(perm[i]);
    CHECK(eval::kde_score(shuffled, ref, 0.1) == doctest::Approx(base).epsilon(1e-13));
}

TEST_CASE("KDE score validates its inputs") {
    PointBatch ref = data::sample_wrapped_normals_sphere(8, data::default_sphere_modes(), 27);
    PointBatch empty;
    CHECK_THROWS_AS(eval::kde_score(empty, ref, 0.1), McfError);
    CHECK_THROWS_AS(eval::kde_score(ref, empty, 0.1), McfError);
    CHECK_THROWS_AS(eval::kde_score(ref, ref, 0.0), McfError);
    PointBatch planar;
    planar.points = Mat::Zero(2, 4);
    CHECK_THROWS_AS(eval::kde_score(planar, ref, 0.1), McfError);
}

TEST_CASE("reconstruction error anchors on the identity model") {
    ModelSpec spec = sphere_spec();
    Model m(spec, 37);

    RandomStream rng(47);
    Mat plane = Mat::Zero(3, 40);
    plane.topRows(2) = rng.normal_mat(2, 40);
    CHECK(eval::recon_error(m, plane) < 1e-28);

    Mat off = Mat::Zero(3, 1);
    off(2, 0) = 1.0;
    CHECK(eval::recon_error(m, off) == doctest::Approx(1.0).epsilon(1e-12));

    Model randomized(spec, 57);
    RandomStream rng2(67);
    randomized.chart_flow.randomize(rng2, 0.4);
    Mat pts = rng2.normal_mat(3, 30);
    CHECK(eval::recon_error(randomized, pts) >= 0.0);
}

TEST_CASE("NLL anchors and bound ordering") {
    ModelSpec spec = sphere_spec();
    Model m(spec, 77);

    Mat origin = Mat::Zero(3, 1);
    CHECK(eval::nll(m, origin, density::Mode::exact) == doctest::Approx(kLog2Pi).epsilon(1e-12));

    RandomStream rng(87);
    Model mild(spec, 97);
    mild.chart_flow.randomize(rng, 0.1);
    Mat pts = Mat::Zero(3, 100);
    pts.topRows(2) = rng.normal_mat(2, 100);
    for (Model* model : {&m, &mild}) {
        double exact = eval::nll(*model, pts, density::Mode::exact);
        double bound = eval::nll(*model, pts, density::Mode::bound);
        CHECK(bound >= exact - 1e-6);
    }
}

TEST_CASE("sphere quadrature reproduces analytically normalized densities") {
    Vec mu(3);
    mu << 0.0, 0.0, 1.0;

    SUBCASE("uniform density integrates to one almost exactly") {
        double integral = eval::quadrature_sphere_analytic(
            [](const Vec& x) { return eval::vmf_log_density(x, Vec::Unit(3, 2), 0.0); }, 200,
            400);
        CHECK(integral == doctest::Approx(1.0).epsilon(1e-4));
    }

    SUBCASE("moderate concentration at the default grid") {
        double integral = eval::quadrature_sphere_analytic(
            [&](const Vec& x) { return eval::vmf_log_density(x, mu, 10.0); }, 200, 400);
        CHECK(integral == doctest::Approx(1.0).epsilon(0.005));
    }

    SUBCASE("strong concentration at the default grid") {
        double integral = eval::quadrature_sphere_analytic(
            [&](const Vec& x) { return eval::vmf_log_density(x, mu, 50.0); }, 200, 400);
        CHECK(integral == doctest::Approx(1.0).epsilon(0.005));
    }

    SUBCASE("an off-axis mean direction changes nothing") {
        Vec tilted(3);
        tilted << 1.0, 1.0, 1.0;
        tilted.normalize();
        double integral = eval::quadrature_sphere_analytic(
            [&](const Vec& x) { return eval::vmf_log_density(x, tilted, 25.0); }, 200, 400);
        CHECK(integral == doctest::Approx(1.0).epsilon(0.005));
    }
}

TEST_CASE("vMF log-density basics") {
    Vec mu = Vec::Unit(3, 2);
    // Mode beats the antipode by exactly 2 kappa nats.
    double at_mode = eval::vmf_log_density(mu, mu, 5.0);
    double at_anti = eval::vmf_log_density(Vec(-mu), mu, 5.0);
    CHECK(at_mode - at_anti == doctest::Approx(10.0).epsilon(1e-12));
    // kappa -> 0 limit is the uniform density.
    CHECK(eval::vmf_log_density(mu, mu, 0.0) ==
          doctest::Approx(-std::log(4.0 * M_PI)).epsilon(1e-12));
    CHECK_THROWS_AS(eval::vmf_log_density(mu, mu, -1.0), McfError);
    CHECK_THROWS_AS(eval::vmf_log_density(Vec::Zero(2), mu, 1.0), McfError);
}

TEST_CASE("model quadrature runs, reports degeneracies, and validates shape") {
    ModelSpec spec = sphere_spec();
    Model m(spec, 107);
    eval::QuadratureResult quad = eval::normalization_quadrature_sphere(m, 50, 100);
    CHECK(std::isfinite(quad.integral));
    CHECK(quad.integral > 0.0);
    CHECK(quad.degenerate_count == 0);

    ModelSpec wide;
    wide.ambient_dim = 5;
    wide.latent_dim = 3;
    Model not_s2(wide, 117);
    CHECK_THROWS_AS(eval::normalization_quadrature_sphere(not_s2, 50, 100), McfError);
    CHECK_THROWS_AS(eval::normalization_quadrature_sphere(m, 1, 100), McfError);
}

TEST_CASE("evaluate aggregates a full report") {
    ModelSpec spec = sphere_spec();
    Model m(spec, 127);
    data::Dataset ds = data::make_dataset("wrapped_normals_sphere", 256, 64, 137);

    eval::EvalOptions opts;
    opts.seed = 5;
    eval::EvalReport report = eval::evaluate(m, ds, opts);
    CHECK(report.n_points == 64);
    CHECK(report.seed == 5);
    REQUIRE(report.mean_nll.count("exact") == 1);
    REQUIRE(report.mean_nll.count("bound") == 1);
    CHECK(report.mean_nll["bound"] >= report.mean_nll["exact"] - 1e-6);
    CHECK(std::isfinite(report.kde_score));
    CHECK(std::isfinite(report.kde_score_transposed));
    CHECK(report.mean_recon_error >= 0.0);
    CHECK(std::isnan(report.normalization_integral));  // quadrature disabled

    opts.quadrature_lat = 40;
    opts.quadrature_lon = 80;
    eval::EvalReport with_quad = eval::evaluate(m, ds, opts);
    CHECK(with_quad.normalization_integral > 0.0);
    CHECK(std::isfinite(with_quad.normalization_integral));

    // Determinism of the whole report.
    eval::EvalReport again = eval::evaluate(m, ds, opts);
    CHECK(again.mean_nll["exact"] == with_quad.mean_nll["exact"]);
    CHECK(again.kde_score == with_quad.kde_score);
    CHECK(again.normalization_integral == with_quad.normalization_integral);
}

TEST_CASE("report validation rejects non-finite entries") {
    eval::EvalReport report;
    report.mean_nll["exact"] = 1.0;
    report.validate(false);
    report.mean_nll["bound"] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(report.validate(false), McfError);
    report.mean_nll["bound"] = 1.0;
    report.normalization_integral = -2.0;
    CHECK_THROWS_AS(report.validate(true), McfError);
    report.normalization_integral = 0.5;
    report.validate(true);
}
