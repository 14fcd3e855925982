// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mcf/common.hpp"

namespace mcf::geom {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// Point on the unit sphere S2; construction checks |x| = 1 within 1e-9.
struct SpherePoint {
    Vec3 xyz;
    static SpherePoint from(const Vec3& v);
};

/// Point on the upper sheet of the Minkowski hyperboloid:
/// <x,x>_L = -x0^2 + x1^2 + x2^2 = -1, x0 > 0, within 1e-9.
struct HyperboloidPoint {
    Vec3 xyz;
    static HyperboloidPoint from(const Vec3& v);
};

double minkowski_dot(const Vec3& a, const Vec3& b);

// --- sphere -----------------------------------------------------------------

/// Tangent vector must satisfy v . base = 0.
Vec3 sphere_exp(const Vec3& base, const Vec3& tangent);
/// Undefined at the antipode of base (throws McfError).
Vec3 sphere_log(const Vec3& base, const Vec3& target);
/// Deterministic tangent-plane basis (b1, b2) at base via Gram-Schmidt
/// from fixed reference axes; b2 = base x b1.
std::pair<Vec3, Vec3> sphere_tangent_basis(const Vec3& base);

// --- hyperboloid ------------------------------------------------------------

/// Tangent vector must satisfy <v, base>_L = 0 (spacelike).
Vec3 hyperboloid_exp(const Vec3& base, const Vec3& tangent);
Vec3 hyperboloid_log(const Vec3& base, const Vec3& target);
std::pair<Vec3, Vec3> hyperboloid_tangent_basis(const Vec3& base);
double hyperboloid_distance(const Vec3& a, const Vec3& b);

// --- projections ------------------------------------------------------------

/// Standard Mollweide map of a sphere point; the auxiliary angle is solved by
/// Newton iteration to 1e-10 (throws after 100 steps without convergence).
Vec2 project_mollweide(const Vec3& sphere_point);
Mat project_mollweide(const Mat& sphere_points);  // 2 x n from 3 x n
/// Inverse of the Mollweide map; returns false when (x, y) is outside the
/// projection ellipse.
bool unproject_mollweide(const Vec2& xy, Vec3& sphere_point);

/// Poincare disk: (x1, x2) / (1 + x0). Output norm < 1.
Vec2 project_poincare(const Vec3& hyperboloid_point);
Mat project_poincare(const Mat& hyperboloid_points);
Vec3 unproject_poincare(const Vec2& disk_point);

}  // namespace mcf::geom
