// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mcf/flows.hpp"

using namespace mcf;
using namespace mcf::flow;

namespace {

SplineParams random_params(RandomStream& rng, int K, double B) {
    Vec rw = rng.normal_vec(K), rh = rng.normal_vec(K), rd = rng.normal_vec(K - 1);
    return SplineParams::from_raw(rw, rh, rd, B);
}

// log|det J| of f at x via dense central finite differences.
double fd_slogdet(const std::function<Vec(const Vec&)>& f, const Vec& x, double h = 1e-6) {
    const auto n = x.size();
    Mat J(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        Vec xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return std::log(std::abs(J.determinant()));
}

FlowTransform random_flow(int dim, int ctx_dim, int layers, const std::string& linear,
                          std::uint64_t seed) {
    auto rng = make_stream(seed, 0);
    ConditionerSpec spec;
    spec.hidden_layers = 2;
    spec.hidden_units = 16;
    FlowTransform f = make_coupling_stack(dim, ctx_dim, layers, 6, 3.0, spec, rng, linear);
    f.randomize(rng, 0.8);
    return f;
}

}  // namespace

TEST_CASE("raw zeros give the identity spline") {
    const int K = 8;
    const double B = 3.0;
    const SplineParams p =
        SplineParams::from_raw(Vec::Zero(K), Vec::Zero(K), Vec::Zero(K - 1), B);
    CHECK(p.widths.isApproxToConstant(2.0 * B / K, 1e-12));
    CHECK(p.heights.isApproxToConstant(2.0 * B / K, 1e-12));
    CHECK(p.derivs.isApproxToConstant(1.0, 1e-12));
    Vec x(7);
    x << -3.0, -1.7, -0.2, 0.0, 0.4, 2.9, 3.0;
    const auto [y, ld] = rq_spline_apply(x, p, false);
    CHECK((y - x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(ld.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("spline is the identity outside the range") {
    auto rng = make_stream(2, 0);
    const SplineParams p = random_params(rng, 8, 3.0);
    Vec x(4);
    x << -4.0, 3.0 + 1.0, 7.5, -100.0;
    for (const bool inv : {false, true}) {
        const auto [y, ld] = rq_spline_apply(x, p, inv);
        CHECK((y - x).cwiseAbs().maxCoeff() == 0.0);
        CHECK(ld.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("spline logdet matches a finite-difference derivative") {
    auto rng = make_stream(3, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const SplineParams p = random_params(rng, 8, 3.0);
        Vec x(1);
        x << (trial == 0 ? 0.3 : rng.uniform(-2.9, 2.9));
        const auto [y, ld] = rq_spline_apply(x, p, false);
        const double h = 1e-6;
        Vec xp(1), xm(1);
        xp << x(0) + h;
        xm << x(0) - h;
        const double fd = (rq_spline_apply(xp, p, false).first(0) -
                           rq_spline_apply(xm, p, false).first(0)) /
                          (2.0 * h);
        CHECK(std::abs(fd - std::exp(ld(0))) / std::abs(fd) < 1e-5);
        (void)y;
    }
}

TEST_CASE("spline inverse round trips and negates the logdet") {
    auto rng = make_stream(4, 0);
    const SplineParams p = random_params(rng, 12, 3.0);
    Vec x(1000);
    for (int i = 0; i < 1000; ++i) x(i) = rng.uniform(-4.5, 4.5);
    const auto [y, ld_f] = rq_spline_apply(x, p, false);
    const auto [back, ld_i] = rq_spline_apply(y, p, true);
    CHECK((back - x).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((ld_f + ld_i).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("spline is strictly monotone") {
    auto rng = make_stream(5, 0);
    const SplineParams p = random_params(rng, 8, 3.0);
    Vec x(2001);
    for (int i = 0; i <= 2000; ++i) x(i) = -5.0 + i * 0.005;
    const auto [y, ld] = rq_spline_apply(x, p, false);
    for (int i = 1; i <= 2000; ++i) CHECK(y(i) > y(i - 1));
    (void)ld;
}

TEST_CASE("spline params reject invalid input") {
    SplineParams p;
    p.widths = Vec::Constant(4, 1.5);
    p.heights = Vec::Constant(4, 1.5);
    p.derivs = Vec::Ones(5);
    p.range_bound = 3.0;
    CHECK_NOTHROW(p.validate());
    SplineParams bad = p;
    bad.derivs(2) = -1.0;
    CHECK_THROWS_AS(bad.validate(), McfError);
    bad = p;
    bad.widths(0) = std::nan("");
    CHECK_THROWS_AS(rq_spline_apply(Vec::Zero(1), bad, false), McfError);
    bad = p;
    bad.heights(0) = 2.0;  // sums no longer match the range
    CHECK_THROWS_AS(bad.validate(), McfError);
}

TEST_CASE("identity-initialized flows are the identity map") {
    auto rng = make_stream(6, 0);
    ConditionerSpec spec;
    spec.hidden_layers = 2;
    spec.hidden_units = 16;
    FlowTransform f = make_coupling_stack(3, 0, 4, 8, 3.0, spec, rng, "none");
    const Mat x = Mat::Random(3, 32) * 2.0;
    const auto [y, ld] = f.forward_values(x);
    CHECK((y - x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(ld.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("empty flow is the identity") {
    FlowTransform f(3, 0);
    const Mat x = Mat::Random(3, 8);
    const auto [y, ld] = f.forward_values(x);
    CHECK((y - x).cwiseAbs().maxCoeff() == 0.0);
    CHECK(ld.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("random flow round trips with opposite logdets") {
    for (const char* linear : {"none", "lu", "permute"}) {
        FlowTransform f = random_flow(3, 0, 4, linear, 7);
        auto rng = make_stream(8, 0);
        Mat x(3, 128);
        for (int j = 0; j < 128; ++j)
            for (int i = 0; i < 3; ++i) x(i, j) = rng.uniform(-9.0, 9.0);
        const auto [y, ld_f] = f.forward_values(x);
        const auto [back, ld_b] = f.inverse_values(y);
        CHECK((back - x).cwiseAbs().maxCoeff() < 1e-5);
        CHECK((ld_f + ld_b).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("large round-trip property over 10^4 draws") {
    FlowTransform f = random_flow(2, 0, 3, "lu", 9);
    auto rng = make_stream(10, 0);
    Mat x(2, 10000);
    for (int j = 0; j < 10000; ++j)
        for (int i = 0; i < 2; ++i) x(i, j) = rng.uniform(-9.0, 9.0);
    const auto [y, ld] = f.forward_values(x);
    const auto [back, ld_b] = f.inverse_values(y);
    CHECK((back - x).cwiseAbs().maxCoeff() < 1e-5);
    (void)ld;
    (void)ld_b;
}

TEST_CASE("flow logdet matches dense finite-difference jacobians") {
    for (const int dim : {2, 3, 5}) {
        FlowTransform f = random_flow(dim, 0, 3, dim >= 3 ? "lu" : "permute", 20 + dim);
        auto rng = make_stream(21, 0);
        for (int trial = 0; trial < 5; ++trial) {
            Vec x(dim);
            for (int i = 0; i < dim; ++i) x(i) = rng.uniform(-2.5, 2.5);
            const auto [y, ld] = f.forward_values(x);
            const double fd = fd_slogdet(
                [&](const Vec& v) { return Vec(f.forward_values(v).first); }, x);
            CHECK(std::abs(fd - ld(0)) < 1e-4 * std::max(1.0, std::abs(fd)));
            (void)y;
        }
    }
}

TEST_CASE("lu layer matches a dense slogdet oracle") {
    auto rng = make_stream(30, 0);
    FlowTransform f(5, 0);
    f.add_lu_linear(rng);
    f.randomize(rng, 1.0);
    const Vec x = rng.normal_vec(5);
    const auto [y, ld] = f.forward_values(x);
    // Materialize the matrix column by column from the linear map.
    Mat A(5, 5);
    for (int j = 0; j < 5; ++j) {
        A.col(j) = f.forward_values(Vec(Vec::Unit(5, j))).first;
    }
    CHECK((A * x - y).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(std::log(std::abs(A.determinant())) - ld(0)) < 1e-10);
}

TEST_CASE("context changes the output of a conditioned flow") {
    FlowTransform f = random_flow(3, 2, 3, "none", 40);
    const Mat x = Mat::Constant(3, 1, 0.7);
    Mat c1 = Mat::Zero(2, 1), c2(2, 1);
    c2 << 1.3, -0.8;
    const auto [y1, ld1] = f.forward_values(x, c1);
    const auto [y2, ld2] = f.forward_values(x, c2);
    CHECK((y1 - y2).cwiseAbs().maxCoeff() > 1e-4);
    // Round trips still hold per context.
    const auto [b1, l1] = f.inverse_values(y1, c1);
    const auto [b2, l2] = f.inverse_values(y2, c2);
    CHECK((b1 - x).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((b2 - x).cwiseAbs().maxCoeff() < 1e-6);
    (void)ld1, (void)ld2, (void)l1, (void)l2;
}

TEST_CASE("parameter gradients match finite differences through the loss") {
    // Loss = sum(y) + sum(logdet) for a small conditioned flow; every
    // parameter array is perturbed at a few entries.
    FlowTransform f = random_flow(3, 2, 2, "lu", 50);
    auto rng = make_stream(51, 0);
    const Mat x = Mat::Random(3, 5) * 2.0;
    const Mat ctx = Mat::Random(2, 5);

    auto loss_at = [&]() {
        const auto [y, ld] = f.forward_values(x, ctx);
        return y.sum() + ld.sum();
    };

    ad::Tape t;
    ad::BindingSet b(t);
    const ad::Var xv = t.constant(x.array());
    const ad::Var cv = t.constant(ctx.array());
    const FlowResult r = f.forward(t, b, xv, cv);
    const ad::Var loss = t.add(t.sum_all(r.y), t.sum_all(r.logdet));
    t.backward(loss);

    int checked = 0;
    for (Arr* p : f.parameters()) {
        const Arr* g = b.grad_of(p);
        if (g == nullptr) continue;  // layer unused in this direction
        REQUIRE(g->rows() == p->rows());
        for (int probe = 0; probe < 2 && p->size() > 0; ++probe) {
            const auto i = static_cast<Eigen::Index>(rng.index(p->size()));
            const double orig = (*p)(i);
            const double h = 1e-5;
            (*p)(i) = orig + h;
            const double up = loss_at();
            (*p)(i) = orig - h;
            const double dn = loss_at();
            (*p)(i) = orig;
            const double fd = (up - dn) / (2.0 * h);
            CHECK(std::abs(fd - (*g)(i)) < 1e-4 * std::max(1.0, std::abs(fd)));
            ++checked;
        }
    }
    CHECK(checked >= 20);
}

TEST_CASE("inverse-path parameter gradients also match finite differences") {
    FlowTransform f = random_flow(2, 0, 2, "lu", 60);
    auto rng = make_stream(61, 0);
    const Mat y = Mat::Random(2, 4) * 2.0;

    auto loss_at = [&]() {
        const auto [x, ld] = f.inverse_values(y);
        return x.sum() + 2.0 * ld.sum();
    };

    ad::Tape t;
    ad::BindingSet b(t);
    const FlowResult r = f.inverse(t, b, t.constant(y.array()), ad::Var{});
    const ad::Var loss = t.add(t.sum_all(r.y), t.mul_s(t.sum_all(r.logdet), 2.0));
    t.backward(loss);

    int checked = 0;
    for (Arr* p : f.parameters()) {
        const Arr* g = b.grad_of(p);
        if (g == nullptr) continue;
        for (int probe = 0; probe < 2 && p->size() > 0; ++probe) {
            const auto i = static_cast<Eigen::Index>(rng.index(p->size()));
            const double orig = (*p)(i);
            const double h = 1e-5;
            (*p)(i) = orig + h;
            const double up = loss_at();
            (*p)(i) = orig - h;
            const double dn = loss_at();
            (*p)(i) = orig;
            const double fd = (up - dn) / (2.0 * h);
            CHECK(std::abs(fd - (*g)(i)) < 2e-4 * std::max(1.0, std::abs(fd)));
            ++checked;
        }
    }
    CHECK(checked >= 10);
}

TEST_CASE("masks and dimensions are validated") {
    auto rng = make_stream(70, 0);
    ConditionerSpec spec;
    FlowTransform f(3, 0);
    CHECK_THROWS_AS(f.add_coupling({1, 0}, 8, 3.0, spec, rng), McfError);     // short mask
    CHECK_THROWS_AS(f.add_coupling({1, 1, 1}, 8, 3.0, spec, rng), McfError);  // nothing moves
    CHECK_THROWS_AS(f.add_coupling({0, 0, 0}, 8, 3.0, spec, rng), McfError);
    CHECK_THROWS_AS(f.add_permutation({0, 1}), McfError);
    CHECK_THROWS_AS(f.add_permutation({0, 1, 1}), McfError);
    f.add_coupling({1, 0, 1}, 8, 3.0, spec, rng);
    CHECK_THROWS_AS(f.forward_values(Mat::Zero(2, 4)), McfError);  // wrong dim

    ConditionerSpec ctx_spec;
    ctx_spec.context_dim = 2;
    CHECK_THROWS_AS(f.add_coupling({1, 0, 1}, 8, 3.0, ctx_spec, rng), McfError);
}

TEST_CASE("permutation layers shuffle rows with zero logdet") {
    FlowTransform f(3, 0);
    f.add_permutation({2, 0, 1});
    Mat x(3, 2);
    x << 1, 2, 3, 4, 5, 6;
    const auto [y, ld] = f.forward_values(x);
    CHECK(y(0, 0) == 5.0);  // row 2 moved up
    CHECK(ld.cwiseAbs().maxCoeff() == 0.0);
    const auto [back, ld2] = f.inverse_values(y);
    CHECK((back - x).cwiseAbs().maxCoeff() == 0.0);
    (void)ld2;
}

TEST_CASE("residual conditioner round trips too") {
    auto rng = make_stream(80, 0);
    ConditionerSpec spec;
    spec.hidden_units = 24;
    spec.residual_blocks = 2;
    FlowTransform f = make_coupling_stack(3, 0, 4, 8, 4.0, spec, rng, "none");
    const Mat probe = Mat::Random(3, 16) * 3.0;
    const auto [y0, l0] = f.forward_values(probe);
    CHECK((y0 - probe).cwiseAbs().maxCoeff() < 1e-12);  // identity at init
    f.randomize(rng, 1.0);
    const auto [y, ld] = f.forward_values(probe);
    const auto [back, ldb] = f.inverse_values(y);
    CHECK((back - probe).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((ld + ldb).cwiseAbs().maxCoeff() < 1e-7);
    (void)l0;
}

TEST_CASE("lu layer reports singular diagonals") {
    auto rng = make_stream(90, 0);
    FlowTransform f(3, 0);
    f.add_lu_linear(rng);
    Arr* U = f.parameters().back();
    (*U)(1, 1) = 0.0;
    CHECK_THROWS_AS(f.forward_values(Mat::Zero(3, 1)), McfError);
    CHECK_THROWS_AS(f.inverse_values(Mat::Zero(3, 1)), McfError);
}
