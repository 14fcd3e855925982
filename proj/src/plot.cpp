// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcf/plot.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "mcf/density.hpp"
#include "mcf/geometry.hpp"

namespace mcf::plot {

namespace {

constexpr std::array<unsigned char, 3> kWhite = {255, 255, 255};
constexpr std::array<unsigned char, 3> kInk = {40, 40, 45};
constexpr double kSqrt2 = 1.4142135623730951;

/// Robust color range: the 2nd..98th percentile of the finite values.
std::pair<double, double> robust_range(std::vector<double> values) {
    values.erase(std::remove_if(values.begin(), values.end(),
                                [](double v) { return !std::isfinite(v); }),
                 values.end());
    if (values.empty()) return {0.0, 1.0};
    std::sort(values.begin(), values.end());
    auto at = [&](double q) {
        const double pos = q * static_cast<double>(values.size() - 1);
        return values[static_cast<std::size_t>(std::llround(pos))];
    };
    double lo = at(0.02), hi = at(0.98);
    if (!(hi > lo)) {
        lo = values.front();
        hi = values.back();
    }
    if (!(hi > lo)) hi = lo + 1.0;
    return {lo, hi};
}

double unit_scale(double v, double lo, double hi) {
    if (!std::isfinite(v)) return 0.0;  // degenerate points get the floor color
    return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
}

void splat(Image& img, int cx, int cy, const std::array<unsigned char, 3>& color) {
    for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
            const int x = cx + dx, y = cy + dy;
            if (x >= 0 && x < img.width && y >= 0 && y < img.height) img.set(x, y, color);
        }
    }
}

struct PixelGrid {
    std::vector<int> xs, ys;  // pixel coordinates of the kept samples
    Mat points;               // 3 x kept ambient points
};

/// Colors the kept pixels of a white image by exact-mode log density.
Image heatmap(const atlas::Model& m, int width, int height, const PixelGrid& grid) {
    Image img(width, height);
    std::fill(img.rgb.begin(), img.rgb.end(), 255);
    if (grid.points.cols() == 0) return img;

    const Mat snapped = atlas::reconstruct(m, grid.points);
    density::DensityOptions opts;
    opts.allow_degenerate = true;
    const density::DensityResult res =
        density::log_prob_manifold(m, snapped, density::Mode::exact, opts);

    std::vector<double> values(res.log_prob.data(), res.log_prob.data() + res.log_prob.size());
    const auto [lo, hi] = robust_range(values);
    for (std::size_t i = 0; i < grid.xs.size(); ++i) {
        img.set(grid.xs[i], grid.ys[i],
                viridis(unit_scale(res.log_prob(static_cast<Eigen::Index>(i)), lo, hi)));
    }
    return img;
}

void require_sphere_model(const atlas::Model& m, const char* what) {
    if (m.spec.ambient_dim != 3 || m.spec.latent_dim != 2) {
        throw McfError(std::string(what) + ": needs a 3-D ambient, 2-D latent model");
    }
}

}  // namespace

Image::Image(int w, int h) : width(w), height(h) {
    if (w < 1 || h < 1) throw McfError("Image: dimensions must be positive");
    rgb.assign(static_cast<std::size_t>(3) * w * h, 0);
}

unsigned char* Image::pixel(int x, int y) {
    return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x);
}

void Image::set(int x, int y, const std::array<unsigned char, 3>& color) {
    unsigned char* p = pixel(x, y);
    p[0] = color[0];
    p[1] = color[1];
    p[2] = color[2];
}

std::array<unsigned char, 3> viridis(double t) {
    static constexpr std::array<std::array<double, 3>, 9> anchors = {{
        {68, 1, 84},
        {72, 40, 120},
        {62, 74, 137},
        {49, 104, 142},
        {38, 130, 142},
        {31, 158, 137},
        {53, 183, 121},
        {110, 206, 88},
        {253, 231, 37},
    }};
    t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
    const double pos = t * (anchors.size() - 1);
    const std::size_t i = std::min(static_cast<std::size_t>(pos), anchors.size() - 2);
    const double f = pos - static_cast<double>(i);
    std::array<unsigned char, 3> out;
    for (int c = 0; c < 3; ++c) {
        out[static_cast<std::size_t>(c)] = static_cast<unsigned char>(
            std::lround(anchors[i][static_cast<std::size_t>(c)] * (1.0 - f) +
                        anchors[i + 1][static_cast<std::size_t>(c)] * f));
    }
    return out;
}

void write_png(const Image& img, const std::string& path) {
    if (img.width < 1 || img.height < 1 ||
        img.rgb.size() != static_cast<std::size_t>(3) * img.width * img.height) {
        throw McfError("write_png: malformed image buffer");
    }
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw McfError("write_png: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) {
        rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(
            img.rgb.data() + static_cast<std::size_t>(3) * img.width * y);
    }
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        throw McfError("write_png: PNG encoding failed for " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fclose(fp) != 0) throw McfError("write_png: closing " + path + " failed");
}

Image density_mollweide(const atlas::Model& m, int width) {
    require_sphere_model(m, "density_mollweide");
    if (width < 16) throw McfError("density_mollweide: width must be >= 16");
    const int height = width / 2;

    PixelGrid grid;
    std::vector<geom::Vec3> kept;
    for (int py = 0; py < height; ++py) {
        for (int px = 0; px < width; ++px) {
            const double x = (2.0 * (px + 0.5) / width - 1.0) * 2.0 * kSqrt2;
            const double y = (1.0 - 2.0 * (py + 0.5) / height) * kSqrt2;
            geom::Vec3 s;
            if (!geom::unproject_mollweide(geom::Vec2(x, y), s)) continue;
            grid.xs.push_back(px);
            grid.ys.push_back(py);
            kept.push_back(s);
        }
    }
    grid.points.resize(3, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) {
        grid.points.col(static_cast<Eigen::Index>(i)) = kept[i];
    }
    return heatmap(m, width, height, grid);
}

Image density_poincare(const atlas::Model& m, int width) {
    require_sphere_model(m, "density_poincare");
    if (width < 16) throw McfError("density_poincare: width must be >= 16");
    const int height = width;
    const double disk_extent = 0.97;  // unit disk fills 97% of the half-width

    PixelGrid grid;
    std::vector<geom::Vec3> kept;
    for (int py = 0; py < height; ++py) {
        for (int px = 0; px < width; ++px) {
            const double x = (2.0 * (px + 0.5) / width - 1.0) / disk_extent;
            const double y = (1.0 - 2.0 * (py + 0.5) / height) / disk_extent;
            if (x * x + y * y > 0.995 * 0.995) continue;
            grid.xs.push_back(px);
            grid.ys.push_back(py);
            kept.push_back(geom::unproject_poincare(geom::Vec2(x, y)));
        }
    }
    grid.points.resize(3, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) {
        grid.points.col(static_cast<Eigen::Index>(i)) = kept[i];
    }
    return heatmap(m, width, height, grid);
}

Image scatter_mollweide(const Mat& sphere_points, int width) {
    if (sphere_points.rows() != 3) throw McfError("scatter_mollweide: points must be 3 x n");
    if (width < 16) throw McfError("scatter_mollweide: width must be >= 16");
    const int height = width / 2;
    Image img(width, height);
    std::fill(img.rgb.begin(), img.rgb.end(), 255);
    const Mat xy = geom::project_mollweide(sphere_points);
    for (Eigen::Index j = 0; j < xy.cols(); ++j) {
        const int px = static_cast<int>((xy(0, j) / (2.0 * kSqrt2) + 1.0) / 2.0 * width);
        const int py = static_cast<int>((1.0 - (xy(1, j) / kSqrt2 + 1.0) / 2.0) * height);
        splat(img, px, py, kInk);
    }
    return img;
}

Image scatter_poincare(const Mat& hyperboloid_points, int width) {
    if (hyperboloid_points.rows() != 3) throw McfError("scatter_poincare: points must be 3 x n");
    if (width < 16) throw McfError("scatter_poincare: width must be >= 16");
    Image img(width, width);
    std::fill(img.rgb.begin(), img.rgb.end(), 255);
    const double disk_extent = 0.97;

    // Disk boundary for orientation.
    for (int k = 0; k < 2048; ++k) {
        const double a = 2.0 * M_PI * k / 2048;
        const int px = static_cast<int>((std::cos(a) * disk_extent + 1.0) / 2.0 * width);
        const int py = static_cast<int>((1.0 - (std::sin(a) * disk_extent + 1.0) / 2.0) * width);
        if (px >= 0 && px < width && py >= 0 && py < width) img.set(px, py, {200, 200, 205});
    }

    const Mat disk = geom::project_poincare(hyperboloid_points);
    for (Eigen::Index j = 0; j < disk.cols(); ++j) {
        const int px = static_cast<int>((disk(0, j) * disk_extent + 1.0) / 2.0 * width);
        const int py = static_cast<int>((1.0 - (disk(1, j) * disk_extent + 1.0) / 2.0) * width);
        splat(img, px, py, kInk);
    }
    return img;
}

Image scatter3d(const Mat& points, const Vec* log_density, int width) {
    if (points.rows() != 3) throw McfError("scatter3d: points must be 3 x n");
    if (points.cols() == 0) throw McfError("scatter3d: no points");
    if (log_density && log_density->size() != points.cols()) {
        throw McfError("scatter3d: density length differs from point count");
    }
    if (width < 16) throw McfError("scatter3d: width must be >= 16");
    const int height = width;
    Image img(width, height);
    std::fill(img.rgb.begin(), img.rgb.end(), 255);

    // Fixed oblique camera: yaw about z, then pitch toward the viewer.
    const double az = -M_PI / 3.0, el = M_PI / 7.2;
    const double ca = std::cos(az), sa = std::sin(az);
    const double ce = std::cos(el), se = std::sin(el);
    const Eigen::Index n = points.cols();
    Mat screen(2, n);
    Vec depth(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double x1 = ca * points(0, j) - sa * points(1, j);
        const double y1 = sa * points(0, j) + ca * points(1, j);
        const double z1 = points(2, j);
        screen(0, j) = x1;
        screen(1, j) = ce * z1 - se * y1;
        depth(j) = ce * y1 + se * z1;
    }
    const double margin = 0.05;
    const double x_lo = screen.row(0).minCoeff(), x_hi = screen.row(0).maxCoeff();
    const double y_lo = screen.row(1).minCoeff(), y_hi = screen.row(1).maxCoeff();
    const double span = std::max({x_hi - x_lo, y_hi - y_lo, 1e-12});
    const double scale = (1.0 - 2.0 * margin) * std::min(width, height) / span;

    std::pair<double, double> range{0.0, 1.0};
    if (log_density) {
        std::vector<double> values(log_density->data(), log_density->data() + n);
        range = robust_range(values);
    }

    // Far-to-near painter order so closer dots overdraw.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return depth(a) < depth(b); });

    for (const Eigen::Index j : order) {
        const int px = static_cast<int>(margin * width +
                                        (screen(0, j) - (x_lo + x_hi) / 2.0) * scale +
                                        (1.0 - 2.0 * margin) * width / 2.0);
        const int py = static_cast<int>(height / 2.0 - (screen(1, j) - (y_lo + y_hi) / 2.0) * scale);
        const std::array<unsigned char, 3> color =
            log_density ? viridis(unit_scale((*log_density)(j), range.first, range.second))
                        : viridis(0.55);
        splat(img, px, py, color);
    }
    return img;
}

}  // namespace mcf::plot
