// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mcf/datasets.hpp"
#include "mcf/density.hpp"
#include "mcf/plot.hpp"

using namespace mcf;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        static int n = 0;
        path = fs::temp_directory_path() /
               ("mcf-plot-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t at) {
    return (std::uint32_t(bytes[at]) << 24) | (std::uint32_t(bytes[at + 1]) << 16) |
           (std::uint32_t(bytes[at + 2]) << 8) | std::uint32_t(bytes[at + 3]);
}

/// Signature + IHDR structure check: the "is a valid image" bar.
void check_png(const std::string& path, int width, int height) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    REQUIRE(bytes.size() > 33);  // signature + IHDR chunk + something
    const std::array<unsigned char, 8> signature = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    for (std::size_t i = 0; i < 8; ++i) CHECK(bytes[i] == signature[i]);
    CHECK(std::string(bytes.begin() + 12, bytes.begin() + 16) == "IHDR");
    CHECK(read_be32(bytes, 16) == static_cast<std::uint32_t>(width));
    CHECK(read_be32(bytes, 20) == static_cast<std::uint32_t>(height));
}

int count_non_white(const plot::Image& img) {
    int n = 0;
    for (std::size_t i = 0; i + 2 < img.rgb.size(); i += 3) {
        if (img.rgb[i] != 255 || img.rgb[i + 1] != 255 || img.rgb[i + 2] != 255) ++n;
    }
    return n;
}

atlas::Model small_model(std::uint64_t seed) {
    atlas::ModelSpec spec;
    spec.ambient_dim = 3;
    spec.latent_dim = 2;
    spec.n_charts = 3;
    spec.chart_layers = 2;
    spec.base_layers = 2;
    spec.chart_bins = 4;
    spec.base_bins = 4;
    return atlas::Model(spec, seed);
}

}  // namespace

TEST_CASE("color ramp hits its anchors and brightens monotonically") {
    CHECK(plot::viridis(0.0) == std::array<unsigned char, 3>{68, 1, 84});
    CHECK(plot::viridis(1.0) == std::array<unsigned char, 3>{253, 231, 37});
    CHECK(plot::viridis(0.5) == std::array<unsigned char, 3>{38, 130, 142});
    CHECK(plot::viridis(-5.0) == plot::viridis(0.0));  // clamped
    CHECK(plot::viridis(7.0) == plot::viridis(1.0));
    int last = -1;
    for (int i = 0; i <= 20; ++i) {
        const auto c = plot::viridis(i / 20.0);
        const int green = c[1];
        CHECK(green >= last);  // the ramp's green channel is monotone
        last = green;
    }
}

TEST_CASE("PNG files are valid and carry the right dimensions") {
    TempDir dir;
    plot::Image img(37, 21);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            img.set(x, y, plot::viridis(static_cast<double>(x) / img.width));
        }
    }
    const std::string path = dir.file("ramp.png");
    plot::write_png(img, path);
    check_png(path, 37, 21);

    CHECK_THROWS_AS(plot::write_png(img, (dir.path / "no-such-dir" / "x.png").string()),
                    McfError);
    plot::Image broken;
    CHECK_THROWS_AS(plot::write_png(broken, dir.file("broken.png")), McfError);
}

TEST_CASE("sphere density heatmap fills the map ellipse only") {
    TempDir dir;
    atlas::Model m = small_model(3);
    plot::Image img = plot::density_mollweide(m, 96);
    CHECK(img.width == 96);
    CHECK(img.height == 48);
    // Corners lie outside the projection ellipse and stay white.
    CHECK(img.pixel(0, 0)[0] == 255);
    CHECK(img.pixel(95, 47)[1] == 255);
    const int colored = count_non_white(img);
    CHECK(colored > 96 * 48 / 2);  // the ellipse covers ~78% of the frame
    const std::string path = dir.file("mollweide.png");
    plot::write_png(img, path);
    check_png(path, 96, 48);

    atlas::ModelSpec wide;
    wide.ambient_dim = 5;
    wide.latent_dim = 3;
    atlas::Model high(wide, 4);
    CHECK_THROWS_AS(plot::density_mollweide(high, 96), McfError);
}

TEST_CASE("disk density heatmap fills the disk only") {
    atlas::Model m = small_model(5);
    plot::Image img = plot::density_poincare(m, 64);
    CHECK(img.width == 64);
    CHECK(img.height == 64);
    CHECK(img.pixel(0, 0)[0] == 255);
    CHECK(img.pixel(1, 63)[2] == 255);
    const int colored = count_non_white(img);
    CHECK(colored > 64 * 64 / 2);  // the disk covers ~71% of the frame
}

TEST_CASE("projection scatters put ink where the data is") {
    PointBatch sphere = data::sample_wrapped_normals_sphere(500, data::default_sphere_modes(), 9);
    plot::Image moll = plot::scatter_mollweide(sphere.points, 128);
    CHECK(count_non_white(moll) > 100);

    PointBatch hyper = data::sample_five_gaussians_hyperbolic(500, 11);
    plot::Image disk = plot::scatter_poincare(hyper.points, 128);
    CHECK(count_non_white(disk) > 100);

    Mat flat = Mat::Zero(2, 4);
    CHECK_THROWS_AS(plot::scatter_mollweide(flat, 128), McfError);
    CHECK_THROWS_AS(plot::scatter_poincare(flat, 128), McfError);
}

TEST_CASE("3-D scatter renders with and without density coloring") {
    TempDir dir;
    PointBatch traj = data::sample_lorenz(400, 4, 50.0, 13);
    plot::Image plain = plot::scatter3d(traj.points, nullptr, 96);
    CHECK(plain.width == 96);
    CHECK(count_non_white(plain) > 200);

    Vec fake_density = traj.points.row(2).transpose();
    plot::Image colored = plot::scatter3d(traj.points, &fake_density, 96);
    CHECK(count_non_white(colored) > 200);
    const std::string path = dir.file("lorenz.png");
    plot::write_png(colored, path);
    check_png(path, 96, 96);

    Vec short_density = Vec::Zero(3);
    CHECK_THROWS_AS(plot::scatter3d(traj.points, &short_density, 96), McfError);
    CHECK_THROWS_AS(plot::scatter3d(Mat::Zero(3, 0), nullptr, 96), McfError);
}
