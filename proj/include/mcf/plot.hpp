// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <vector>

#include "mcf/atlas.hpp"
#include "mcf/common.hpp"

namespace mcf::plot {

struct Image {
    int width = 0;
    int height = 0;
    std::vector<unsigned char> rgb;  // row-major, 3 bytes per pixel

    Image() = default;
    Image(int w, int h);
    unsigned char* pixel(int x, int y);
    void set(int x, int y, const std::array<unsigned char, 3>& color);
};

/// Perceptually ordered dark-blue-to-yellow ramp (higher t = brighter);
/// t is clamped to [0, 1].
std::array<unsigned char, 3> viridis(double t);

/// 8-bit RGB PNG.
void write_png(const Image& img, const std::string& path);

/// Exact-mode log-density heatmap of a sphere model (D=3, d=2) in the
/// Mollweide projection; pixels outside the map ellipse stay white, grid
/// points with a degenerate chart Jacobian get the lowest color. The image
/// is width x width/2.
Image density_mollweide(const atlas::Model& m, int width);

/// Same heatmap for a hyperboloid model in the Poincare disk (square image,
/// disk radius 0.97 of the half-width).
Image density_poincare(const atlas::Model& m, int width);

/// Dataset scatters in the matching projections (dark dots on white).
Image scatter_mollweide(const Mat& sphere_points, int width);
Image scatter_poincare(const Mat& hyperboloid_points, int width);

/// Orthographic 3-D scatter (fixed oblique camera). When log_density is
/// non-null (one value per column) the dots are colored by their percentile
/// under the viridis ramp, otherwise drawn in a single mid-ramp color.
Image scatter3d(const Mat& points, const Vec* log_density, int width);

}  // namespace mcf::plot
