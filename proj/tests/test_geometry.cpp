// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mcf/geometry.hpp"

using namespace mcf;
using namespace mcf::geom;

namespace {
constexpr double kPi = 3.14159265358979323846;

Vec3 random_sphere_point(RandomStream& rng) {
    Vec3 v(rng.normal(), rng.normal(), rng.normal());
    return v.normalized();
}

Vec3 random_hyperboloid_point(RandomStream& rng, double spread) {
    const Vec2 u(spread * rng.normal(), spread * rng.normal());
    const double r = u.norm();
    const Vec3 origin(1.0, 0.0, 0.0);
    if (r < 1e-14) return origin;
    const Vec3 tangent(0.0, u(0), u(1));
    return hyperboloid_exp(origin, tangent);
}
}  // namespace

TEST_CASE("point validation enforces manifold membership") {
    CHECK_NOTHROW(SpherePoint::from(Vec3(0.0, 0.0, 1.0)));
    CHECK_THROWS_AS(SpherePoint::from(Vec3(0.0, 0.0, 1.001)), McfError);
    CHECK_NOTHROW(HyperboloidPoint::from(Vec3(1.0, 0.0, 0.0)));
    // Correct quadric but lower sheet.
    CHECK_THROWS_AS(HyperboloidPoint::from(Vec3(-1.0, 0.0, 0.0)), McfError);
    CHECK_THROWS_AS(HyperboloidPoint::from(Vec3(1.1, 0.0, 0.0)), McfError);
}

TEST_CASE("exp of the zero tangent is the base point") {
    const Vec3 sb(0.0, 0.0, 1.0);
    CHECK((sphere_exp(sb, Vec3::Zero()) - sb).norm() == doctest::Approx(0.0));
    const Vec3 hb(std::cosh(0.7), std::sinh(0.7), 0.0);
    CHECK((hyperboloid_exp(hb, Vec3::Zero()) - hb).norm() == doctest::Approx(0.0));
}

TEST_CASE("quarter-circle geodesic from the north pole lands on the equator") {
    const Vec3 base(0.0, 0.0, 1.0);
    const Vec3 tangent(kPi / 2.0, 0.0, 0.0);
    const Vec3 got = sphere_exp(base, tangent);
    CHECK((got - Vec3(1.0, 0.0, 0.0)).norm() < 1e-12);
}

TEST_CASE("sphere log/exp round trip over random draws") {
    auto rng = make_stream(41, 0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const Vec3 base = random_sphere_point(rng);
        auto [b1, b2] = sphere_tangent_basis(base);
        // Keep |v| < pi where the log is well defined.
        const double r = 0.999 * kPi * rng.uniform();
        const double a = 2.0 * kPi * rng.uniform();
        const Vec3 v = r * (std::cos(a) * b1 + std::sin(a) * b2);
        const Vec3 back = sphere_log(base, sphere_exp(base, v));
        worst = std::max(worst, (back - v).norm());
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("hyperboloid log/exp round trip over random draws") {
    auto rng = make_stream(42, 0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const Vec3 base = random_hyperboloid_point(rng, 1.0);
        auto [b1, b2] = hyperboloid_tangent_basis(base);
        const Vec3 v = (3.0 * rng.normal()) * b1 + (3.0 * rng.normal()) * b2;
        const Vec3 back = hyperboloid_log(base, hyperboloid_exp(base, v));
        worst = std::max(worst, (back - v).norm());
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("exp stays on the manifold") {
    auto rng = make_stream(43, 0);
    for (int i = 0; i < 1000; ++i) {
        const Vec3 sb = random_sphere_point(rng);
        auto [s1, s2] = sphere_tangent_basis(sb);
        const Vec3 sp = sphere_exp(sb, rng.normal() * s1 + rng.normal() * s2);
        CHECK(std::abs(sp.norm() - 1.0) < 1e-12);

        const Vec3 hb = random_hyperboloid_point(rng, 1.0);
        auto [h1, h2] = hyperboloid_tangent_basis(hb);
        const Vec3 hp = hyperboloid_exp(hb, rng.normal() * h1 + rng.normal() * h2);
        CHECK(std::abs(minkowski_dot(hp, hp) + 1.0) < 1e-10);
        CHECK(hp(0) > 0.0);
    }
}

TEST_CASE("antipodal sphere log raises") {
    const Vec3 base(0.0, 0.0, 1.0);
    CHECK_THROWS_AS(sphere_log(base, Vec3(0.0, 0.0, -1.0)), McfError);
}

TEST_CASE("tangent bases are orthonormal and deterministic") {
    auto rng = make_stream(44, 0);
    for (int i = 0; i < 200; ++i) {
        const Vec3 sb = random_sphere_point(rng);
        auto [s1, s2] = sphere_tangent_basis(sb);
        CHECK(std::abs(s1.dot(sb)) < 1e-12);
        CHECK(std::abs(s2.dot(sb)) < 1e-12);
        CHECK(std::abs(s1.dot(s2)) < 1e-12);
        CHECK(s1.norm() == doctest::Approx(1.0));
        CHECK(s2.norm() == doctest::Approx(1.0));
        auto [r1, r2] = sphere_tangent_basis(sb);
        CHECK((r1 - s1).norm() == 0.0);
        CHECK((r2 - s2).norm() == 0.0);

        const Vec3 hb = random_hyperboloid_point(rng, 1.0);
        auto [h1, h2] = hyperboloid_tangent_basis(hb);
        CHECK(std::abs(minkowski_dot(h1, hb)) < 1e-10);
        CHECK(std::abs(minkowski_dot(h2, hb)) < 1e-10);
        CHECK(std::abs(minkowski_dot(h1, h2)) < 1e-10);
        CHECK(minkowski_dot(h1, h1) == doctest::Approx(1.0));
        CHECK(minkowski_dot(h2, h2) == doctest::Approx(1.0));
    }
}

TEST_CASE("hyperboloid distance matches tangent norm of the log") {
    auto rng = make_stream(45, 0);
    for (int i = 0; i < 200; ++i) {
        const Vec3 a = random_hyperboloid_point(rng, 1.0);
        const Vec3 b = random_hyperboloid_point(rng, 1.0);
        const Vec3 v = hyperboloid_log(a, b);
        const double vnorm = std::sqrt(std::max(minkowski_dot(v, v), 0.0));
        CHECK(hyperboloid_distance(a, b) == doctest::Approx(vnorm).epsilon(1e-9));
    }
}

TEST_CASE("mollweide anchors and round trip") {
    // lon = 0, lat = 0 maps to the center of the ellipse.
    const Vec2 c = project_mollweide(Vec3(1.0, 0.0, 0.0));
    CHECK(c.norm() < 1e-12);
    // Poles map to (0, +-sqrt(2)).
    const Vec2 np = project_mollweide(Vec3(0.0, 0.0, 1.0));
    CHECK(np(0) == doctest::Approx(0.0));
    CHECK(np(1) == doctest::Approx(std::sqrt(2.0)));

    auto rng = make_stream(46, 0);
    double worst = 0.0;
    for (int i = 0; i < 5000; ++i) {
        const Vec3 p = random_sphere_point(rng);
        Vec3 back;
        REQUIRE(unproject_mollweide(project_mollweide(p), back));
        worst = std::max(worst, (back - p).norm());
    }
    CHECK(worst < 1e-7);
    Vec3 ignore;
    CHECK_FALSE(unproject_mollweide(Vec2(0.0, 2.0), ignore));
    CHECK_FALSE(unproject_mollweide(Vec2(3.0, 0.0), ignore));
}

TEST_CASE("poincare projection matches the tanh(r/2) radius law") {
    auto rng = make_stream(47, 0);
    const Vec3 origin(1.0, 0.0, 0.0);
    for (int i = 0; i < 500; ++i) {
        const double r = 4.0 * rng.uniform();
        const double a = 2.0 * kPi * rng.uniform();
        const Vec3 tangent(0.0, r * std::cos(a), r * std::sin(a));
        const Vec3 p = hyperboloid_exp(origin, tangent);
        const Vec2 z = project_poincare(p);
        CHECK(z.norm() == doctest::Approx(std::tanh(r / 2.0)).epsilon(1e-9));
        // Angle is preserved.
        if (r > 1e-6) {
            CHECK(std::atan2(z(1), z(0)) == doctest::Approx(std::atan2(tangent(2), tangent(1))));
        }
        const Vec3 back = unproject_poincare(z);
        CHECK((back - p).norm() < 1e-9 * (1.0 + p.norm()));
    }
    CHECK_THROWS_AS(unproject_poincare(Vec2(1.0, 0.0)), McfError);
}

TEST_CASE("batched projections agree with the scalar paths") {
    auto rng = make_stream(48, 0);
    Mat sp(3, 17), hp(3, 17);
    for (int i = 0; i < 17; ++i) {
        sp.col(i) = random_sphere_point(rng);
        hp.col(i) = random_hyperboloid_point(rng, 0.8);
    }
    const Mat ms = project_mollweide(sp);
    const Mat mp = project_poincare(hp);
    for (int i = 0; i < 17; ++i) {
        CHECK((ms.col(i) - project_mollweide(Vec3(sp.col(i)))).norm() == 0.0);
        CHECK((mp.col(i) - project_poincare(Vec3(hp.col(i)))).norm() == 0.0);
    }
}
