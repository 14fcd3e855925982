// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcf/geometry.hpp"

#include <cmath>

namespace mcf::geom {

namespace {
constexpr double kMembershipTol = 1e-9;
constexpr double kPi = 3.14159265358979323846;
}  // namespace

SpherePoint SpherePoint::from(const Vec3& v) {
    if (std::abs(v.norm() - 1.0) > kMembershipTol) {
        throw McfError("SpherePoint: |x| deviates from 1 by more than 1e-9");
    }
    return SpherePoint{v};
}

HyperboloidPoint HyperboloidPoint::from(const Vec3& v) {
    const double q = minkowski_dot(v, v);
    if (std::abs(q + 1.0) > kMembershipTol || v(0) <= 0.0) {
        throw McfError("HyperboloidPoint: <x,x>_L != -1 or x0 <= 0");
    }
    return HyperboloidPoint{v};
}

double minkowski_dot(const Vec3& a, const Vec3& b) {
    return -a(0) * b(0) + a(1) * b(1) + a(2) * b(2);
}

// --- sphere -----------------------------------------------------------------

Vec3 sphere_exp(const Vec3& base, const Vec3& tangent) {
    const double t = tangent.norm();
    if (t < 1e-14) return base;
    return std::cos(t) * base + (std::sin(t) / t) * tangent;
}

Vec3 sphere_log(const Vec3& base, const Vec3& target) {
    const double c = std::clamp(base.dot(target), -1.0, 1.0);
    if (c < -1.0 + 1e-12) {
        throw McfError("sphere_log: target is antipodal to base; log undefined");
    }
    const Vec3 perp = target - c * base;
    const double pn = perp.norm();
    if (pn < 1e-14) return Vec3::Zero();
    return (std::acos(c) / pn) * perp;
}

std::pair<Vec3, Vec3> sphere_tangent_basis(const Vec3& base) {
    // Pick the fixed axis least aligned with base, project it into the
    // tangent plane, then complete with the cross product.  Deterministic:
    // no RNG, branch only on component magnitudes.
    int k = 0;
    for (int i = 1; i < 3; ++i) {
        if (std::abs(base(i)) < std::abs(base(k))) k = i;
    }
    Vec3 ref = Vec3::Zero();
    ref(k) = 1.0;
    Vec3 b1 = ref - base.dot(ref) * base;
    b1.normalize();
    Vec3 b2 = base.cross(b1);
    return {b1, b2};
}

// --- hyperboloid ------------------------------------------------------------

Vec3 hyperboloid_exp(const Vec3& base, const Vec3& tangent) {
    const double q = minkowski_dot(tangent, tangent);
    const double t = std::sqrt(std::max(q, 0.0));
    if (t < 1e-14) return base;
    return std::cosh(t) * base + (std::sinh(t) / t) * tangent;
}

Vec3 hyperboloid_log(const Vec3& base, const Vec3& target) {
    // <base,target>_L <= -1 with equality iff the points coincide.
    const double c = std::min(minkowski_dot(base, target), -1.0);
    const double d = std::acosh(-c);
    const Vec3 perp = target + c * base;  // projection onto the tangent space
    const double pn = std::sqrt(std::max(minkowski_dot(perp, perp), 0.0));
    if (pn < 1e-14) return Vec3::Zero();
    return (d / pn) * perp;
}

std::pair<Vec3, Vec3> hyperboloid_tangent_basis(const Vec3& base) {
    // Gram-Schmidt under the Minkowski metric against fixed spacelike seeds
    // e1, e2; both outputs satisfy <b, base>_L = 0 and <b, b>_L = 1.
    Vec3 seeds[2] = {Vec3(0.0, 1.0, 0.0), Vec3(0.0, 0.0, 1.0)};
    Vec3 basis[2];
    int got = 0;
    for (const Vec3& s : seeds) {
        // Project out the base direction (note <base,base>_L = -1).
        Vec3 v = s + minkowski_dot(s, base) * base;
        for (int j = 0; j < got; ++j) {
            v -= minkowski_dot(v, basis[j]) * basis[j];
        }
        const double n2 = minkowski_dot(v, v);
        if (n2 < 1e-18) {
            throw McfError("hyperboloid_tangent_basis: degenerate seed projection");
        }
        basis[got++] = v / std::sqrt(n2);
    }
    return {basis[0], basis[1]};
}

double hyperboloid_distance(const Vec3& a, const Vec3& b) {
    return std::acosh(std::max(-minkowski_dot(a, b), 1.0));
}

// --- projections ------------------------------------------------------------

namespace {

// Solves 2t + sin(2t) = pi * sin(lat) for the Mollweide auxiliary angle t.
double mollweide_theta(double lat) {
    if (std::abs(std::abs(lat) - kPi / 2.0) < 1e-12) {
        return std::copysign(kPi / 2.0, lat);
    }
    const double rhs = kPi * std::sin(lat);
    double t = lat;
    for (int it = 0; it < 100; ++it) {
        const double f = 2.0 * t + std::sin(2.0 * t) - rhs;
        if (std::abs(f) < 1e-10) return t;
        t -= f / (2.0 + 2.0 * std::cos(2.0 * t));
    }
    throw McfError("project_mollweide: Newton iteration failed to converge");
}

}  // namespace

Vec2 project_mollweide(const Vec3& p) {
    const double lon = std::atan2(p(1), p(0));
    const double lat = std::asin(std::clamp(p(2), -1.0, 1.0));
    const double t = mollweide_theta(lat);
    const double sqrt2 = std::sqrt(2.0);
    return Vec2(2.0 * sqrt2 / kPi * lon * std::cos(t), sqrt2 * std::sin(t));
}

Mat project_mollweide(const Mat& pts) {
    Mat out(2, pts.cols());
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
        out.col(i) = project_mollweide(Vec3(pts.col(i)));
    }
    return out;
}

bool unproject_mollweide(const Vec2& xy, Vec3& sphere_point) {
    const double sqrt2 = std::sqrt(2.0);
    const double st = xy(1) / sqrt2;
    if (std::abs(st) > 1.0) return false;
    const double t = std::asin(st);
    const double lon = kPi * xy(0) / (2.0 * sqrt2 * std::cos(t));
    if (std::abs(lon) > kPi || !std::isfinite(lon)) return false;
    const double lat = std::asin(std::clamp((2.0 * t + std::sin(2.0 * t)) / kPi, -1.0, 1.0));
    sphere_point = Vec3(std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon),
                        std::sin(lat));
    return true;
}

Vec2 project_poincare(const Vec3& p) {
    return Vec2(p(1), p(2)) / (1.0 + p(0));
}

Mat project_poincare(const Mat& pts) {
    Mat out(2, pts.cols());
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
        out.col(i) = project_poincare(Vec3(pts.col(i)));
    }
    return out;
}

Vec3 unproject_poincare(const Vec2& z) {
    const double r2 = z.squaredNorm();
    if (r2 >= 1.0) {
        throw McfError("unproject_poincare: point outside the unit disk");
    }
    const double s = 1.0 / (1.0 - r2);
    return Vec3((1.0 + r2) * s, 2.0 * z(0) * s, 2.0 * z(1) * s);
}

}  // namespace mcf::geom
