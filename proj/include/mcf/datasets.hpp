// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "mcf/common.hpp"
#include "mcf/geometry.hpp"

namespace mcf::data {

/// A train/val pair of point batches (columns = points), disjoint draws from
/// the same generator.
struct Dataset {
    PointBatch train;
    PointBatch val;
    int ambient_dim = 0;
    std::string name;
    std::uint64_t seed = 0;
    std::string layout;  // generator-specific geometry notes (cell grid etc.)
};

/// One component of a wrapped-normal mixture: a manifold mode center and the
/// isotropic tangent-space standard deviation.
struct WrappedMode {
    geom::Vec3 center;
    double scale = 0.0;
};

/// Four tetrahedral-vertex modes, scale 0.2 each.
std::vector<WrappedMode> default_sphere_modes();

PointBatch sample_wrapped_normals_sphere(int n, const std::vector<WrappedMode>& modes,
                                         std::uint64_t seed);
/// Uniform sphere draws restricted to |z| <= 0.8, rejected outside the "on"
/// cells of an 8-longitude x 4-latitude alternating grid.
PointBatch sample_checkerboard_sphere(int n, std::uint64_t seed);
/// Wrapped normals on H2: one mode at the apex plus four at tangent radius
/// 1.3, angles 45 + 90k degrees; shared scale.
PointBatch sample_five_gaussians_hyperbolic(int n, std::uint64_t seed, double scale = 0.3);
/// Uniform (w.r.t. the hyperbolic area element) over the "on" cells of a
/// 4x4 alternating grid in Poincare coordinates on the square [-s, s]^2,
/// s = 0.7/sqrt(2).
PointBatch sample_checkerboard_hyperbolic(int n, std::uint64_t seed);

/// Positions pooled uniformly over t from n_trajectories Lorenz runs
/// (sigma=10, rho=28, beta=8/3, RK4, 10-time-unit burn-in). Throws McfError
/// if the integration diverges (dt too large).
PointBatch sample_lorenz(int n_points, int n_trajectories, double t_span, std::uint64_t seed,
                         double dt = 0.01);

/// von Mises-Fisher mixture on S2; modes are 3 x m unit columns, one kappa
/// per mode (kappa = 0 gives the uniform distribution). Components are
/// chosen uniformly.
PointBatch sample_vmf_mixture(int n, const Mat& modes, const Vec& kappas, std::uint64_t seed);

struct GeoLoadResult {
    Dataset dataset;
    int rows_read = 0;     // data rows seen (excluding header)
    int rows_dropped = 0;  // malformed or out-of-range rows skipped
};

/// Reads decimal-degree latitude/longitude columns (by header name) into unit
/// vectors (cos lat cos lon, cos lat sin lon, sin lat); invalid rows are
/// dropped and counted; shuffled split with floor(train_fraction * n) train
/// rows, the remainder validation.
GeoLoadResult load_geo_csv(const std::string& path, const std::string& lat_column,
                           const std::string& lon_column, std::uint64_t seed,
                           double train_fraction = 0.8);

/// Builds a named dataset with disjoint train/val streams. Names:
/// wrapped_normals_sphere, checkerboard_sphere, five_gaussians_hyperbolic,
/// checkerboard_hyperbolic, lorenz, vmf_bimodal.
Dataset make_dataset(const std::string& name, int n_train, int n_val, std::uint64_t seed);

/// Writes <prefix>.bin (raw column-major doubles, train then val) and
/// <prefix>.json (name, seed, sizes, layout); load reverses it exactly.
void save_dataset(const Dataset& ds, const std::string& path_prefix);
Dataset load_dataset(const std::string& path_prefix);

}  // namespace mcf::data
