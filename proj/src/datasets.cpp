// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcf/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace mcf::data {

namespace {
constexpr double kPi = 3.14159265358979323846;

geom::Vec3 uniform_sphere(RandomStream& rng) {
    // Marsaglia would also work; normalized Gaussians are simpler and exact.
    geom::Vec3 v(rng.normal(), rng.normal(), rng.normal());
    const double n = v.norm();
    return n > 1e-300 ? geom::Vec3(v / n) : geom::Vec3(0.0, 0.0, 1.0);
}
}  // namespace

std::vector<WrappedMode> default_sphere_modes() {
    const double s = 1.0 / std::sqrt(3.0);
    return {
        {geom::Vec3(s, s, s), 0.2},
        {geom::Vec3(s, -s, -s), 0.2},
        {geom::Vec3(-s, s, -s), 0.2},
        {geom::Vec3(-s, -s, s), 0.2},
    };
}

PointBatch sample_wrapped_normals_sphere(int n, const std::vector<WrappedMode>& modes,
                                         std::uint64_t seed) {
    if (n < 1) throw McfError("sample_wrapped_normals_sphere: n must be >= 1");
    if (modes.empty()) throw McfError("sample_wrapped_normals_sphere: no modes given");
    for (const auto& m : modes) {
        if (std::abs(m.center.norm() - 1.0) > 1e-9) {
            throw McfError("sample_wrapped_normals_sphere: mode center is not a unit vector");
        }
        if (m.scale < 0.0) throw McfError("sample_wrapped_normals_sphere: negative scale");
    }
    auto rng = make_stream(seed, 0);
    Mat out(3, n);
    for (int i = 0; i < n; ++i) {
        const auto& m = modes[rng.index(modes.size())];
        auto [b1, b2] = geom::sphere_tangent_basis(m.center);
        const geom::Vec3 v = m.scale * (rng.normal() * b1 + rng.normal() * b2);
        out.col(i) = geom::sphere_exp(m.center, v);
    }
    return PointBatch{out};
}

namespace {

// 8 longitude x 4 latitude-band grid on |z| <= 0.8; bands of equal z-width
// have equal area, so the "on" cells form an equal-area partition.
bool sphere_cell_on(const geom::Vec3& p) {
    if (std::abs(p(2)) > 0.8) return false;
    const double lon = std::atan2(p(1), p(0));  // (-pi, pi]
    const int i_lon = std::min(7, static_cast<int>(std::floor((lon + kPi) / (2.0 * kPi) * 8.0)));
    const int i_z = std::min(3, static_cast<int>(std::floor((p(2) + 0.8) / 1.6 * 4.0)));
    return (i_lon + i_z) % 2 == 0;
}

}  // namespace

PointBatch sample_checkerboard_sphere(int n, std::uint64_t seed) {
    if (n < 1) throw McfError("sample_checkerboard_sphere: n must be >= 1");
    auto rng = make_stream(seed, 0);
    Mat out(3, n);
    int got = 0;
    while (got < n) {
        const geom::Vec3 p = uniform_sphere(rng);
        if (sphere_cell_on(p)) out.col(got++) = p;
    }
    return PointBatch{out};
}

namespace {

std::vector<WrappedMode> five_gaussian_modes(double scale) {
    const geom::Vec3 origin(1.0, 0.0, 0.0);
    std::vector<WrappedMode> modes{{origin, scale}};
    for (int k = 0; k < 4; ++k) {
        const double a = kPi / 4.0 + k * kPi / 2.0;
        const geom::Vec3 tangent(0.0, 1.3 * std::cos(a), 1.3 * std::sin(a));
        modes.push_back({geom::hyperboloid_exp(origin, tangent), scale});
    }
    return modes;
}

}  // namespace

PointBatch sample_five_gaussians_hyperbolic(int n, std::uint64_t seed, double scale) {
    if (n < 1) throw McfError("sample_five_gaussians_hyperbolic: n must be >= 1");
    if (scale < 0.0) throw McfError("sample_five_gaussians_hyperbolic: negative scale");
    const auto modes = five_gaussian_modes(scale);
    auto rng = make_stream(seed, 0);
    Mat out(3, n);
    for (int i = 0; i < n; ++i) {
        const auto& m = modes[rng.index(modes.size())];
        auto [b1, b2] = geom::hyperboloid_tangent_basis(m.center);
        const geom::Vec3 v = m.scale * (rng.normal() * b1 + rng.normal() * b2);
        out.col(i) = geom::hyperboloid_exp(m.center, v);
    }
    return PointBatch{out};
}

PointBatch sample_checkerboard_hyperbolic(int n, std::uint64_t seed) {
    if (n < 1) throw McfError("sample_checkerboard_hyperbolic: n must be >= 1");
    const double s = 0.7 / std::sqrt(2.0);
    // Hyperbolic area element in Poincare coordinates is 4 / (1 - r^2)^2;
    // its maximum over the square sits at the corners (r = 0.7).
    const double w_max = 4.0 / ((1.0 - 0.49) * (1.0 - 0.49));
    auto rng = make_stream(seed, 0);
    Mat out(3, n);
    int got = 0;
    while (got < n) {
        const double x = s * (2.0 * rng.uniform() - 1.0);
        const double y = s * (2.0 * rng.uniform() - 1.0);
        const int ix = std::min(3, static_cast<int>(std::floor((x + s) / (2.0 * s) * 4.0)));
        const int iy = std::min(3, static_cast<int>(std::floor((y + s) / (2.0 * s) * 4.0)));
        if ((ix + iy) % 2 != 0) continue;
        const double r2 = x * x + y * y;
        const double w = 4.0 / ((1.0 - r2) * (1.0 - r2));
        if (rng.uniform() * w_max > w) continue;
        out.col(got++) = geom::unproject_poincare(geom::Vec2(x, y));
    }
    return PointBatch{out};
}

namespace {

geom::Vec3 lorenz_rhs(const geom::Vec3& p) {
    constexpr double sigma = 10.0, rho = 28.0, beta = 8.0 / 3.0;
    return geom::Vec3(sigma * (p(1) - p(0)), p(0) * (rho - p(2)) - p(1),
                      p(0) * p(1) - beta * p(2));
}

geom::Vec3 rk4_step(const geom::Vec3& p, double dt) {
    const geom::Vec3 k1 = lorenz_rhs(p);
    const geom::Vec3 k2 = lorenz_rhs(p + 0.5 * dt * k1);
    const geom::Vec3 k3 = lorenz_rhs(p + 0.5 * dt * k2);
    const geom::Vec3 k4 = lorenz_rhs(p + dt * k3);
    return p + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

PointBatch sample_lorenz(int n_points, int n_trajectories, double t_span, std::uint64_t seed,
                         double dt) {
    if (n_points < 1 || n_trajectories < 1) {
        throw McfError("sample_lorenz: n_points and n_trajectories must be >= 1");
    }
    if (t_span <= 0.0 || dt <= 0.0) {
        throw McfError("sample_lorenz: t_span and dt must be positive");
    }
    auto rng = make_stream(seed, 0);
    const long steps = std::lround(t_span / dt);
    const long burn = std::lround(10.0 / dt);
    Mat out(3, n_points);
    int written = 0;
    for (int traj = 0; traj < n_trajectories; ++traj) {
        // Spread n_points as evenly as possible across trajectories.
        const int quota = static_cast<int>((static_cast<long>(n_points) * (traj + 1)) /
                                               n_trajectories -
                                           (static_cast<long>(n_points) * traj) / n_trajectories);
        if (quota == 0) continue;
        // Pre-draw the sample instants so the whole trajectory never needs to
        // be stored; sorted so one forward sweep collects them all.
        std::vector<long> pick(quota);
        for (auto& s : pick) s = static_cast<long>(rng.index(static_cast<std::size_t>(steps)));
        std::sort(pick.begin(), pick.end());

        geom::Vec3 p(30.0 * (rng.uniform() - 0.5), 30.0 * (rng.uniform() - 0.5),
                     5.0 + 40.0 * rng.uniform());
        for (long s = 0; s < burn; ++s) p = rk4_step(p, dt);
        std::size_t next = 0;
        for (long s = 0; s < steps && next < pick.size(); ++s) {
            while (next < pick.size() && pick[next] == s) out.col(written + next++) = p;
            p = rk4_step(p, dt);
            if (!p.allFinite() || p.cwiseAbs().maxCoeff() > 1e3) {
                throw McfError("sample_lorenz: integration diverged; reduce dt");
            }
        }
        written += quota;
    }
    return PointBatch{out};
}

PointBatch sample_vmf_mixture(int n, const Mat& modes, const Vec& kappas, std::uint64_t seed) {
    if (n < 1) throw McfError("sample_vmf_mixture: n must be >= 1");
    if (modes.rows() != 3 || modes.cols() < 1 || kappas.size() != modes.cols()) {
        throw McfError("sample_vmf_mixture: modes must be 3 x m with one kappa per mode");
    }
    for (Eigen::Index j = 0; j < modes.cols(); ++j) {
        if (std::abs(modes.col(j).norm() - 1.0) > 1e-9) {
            throw McfError("sample_vmf_mixture: mode is not a unit vector");
        }
        if (kappas(j) < 0.0) throw McfError("sample_vmf_mixture: kappa must be >= 0");
    }
    auto rng = make_stream(seed, 0);
    Mat out(3, n);
    for (int i = 0; i < n; ++i) {
        const auto j = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(modes.cols())));
        const double kappa = kappas(j);
        double w;
        if (kappa < 1e-12) {
            w = 2.0 * rng.uniform() - 1.0;
        } else {
            // Inverse-CDF of the vMF cosine on S2, written to stay finite for
            // large kappa: w = 1 + log(u + (1-u) e^{-2k}) / k.
            const double u = std::max(rng.uniform(), 1e-300);
            w = 1.0 + std::log(u + (1.0 - u) * std::exp(-2.0 * kappa)) / kappa;
            w = std::clamp(w, -1.0, 1.0);
        }
        const geom::Vec3 mu = modes.col(j);
        auto [b1, b2] = geom::sphere_tangent_basis(mu);
        const double theta = 2.0 * kPi * rng.uniform();
        const double sw = std::sqrt(std::max(0.0, 1.0 - w * w));
        out.col(i) = w * mu + sw * (std::cos(theta) * b1 + std::sin(theta) * b2);
    }
    return PointBatch{out};
}

GeoLoadResult load_geo_csv(const std::string& path, const std::string& lat_column,
                           const std::string& lon_column, std::uint64_t seed,
                           double train_fraction) {
    if (train_fraction <= 0.0 || train_fraction >= 1.0) {
        throw McfError("load_geo_csv: train_fraction must lie in (0, 1)");
    }
    std::ifstream in(path);
    if (!in) throw McfError("load_geo_csv: cannot open " + path);

    auto split_row = [](const std::string& line) {
        std::vector<std::string> cells;
        std::string cell;
        std::stringstream ss(line);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        return cells;
    };
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return std::string();
        const auto b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    };

    std::string line;
    if (!std::getline(in, line)) throw McfError("load_geo_csv: empty file " + path);
    const auto header = split_row(line);
    int lat_idx = -1, lon_idx = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (trim(header[i]) == lat_column) lat_idx = static_cast<int>(i);
        if (trim(header[i]) == lon_column) lon_idx = static_cast<int>(i);
    }
    if (lat_idx < 0 || lon_idx < 0) {
        throw McfError("load_geo_csv: missing column '" +
                       (lat_idx < 0 ? lat_column : lon_column) + "' in " + path);
    }

    std::vector<geom::Vec3> pts;
    int rows_read = 0, dropped = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++rows_read;
        const auto cells = split_row(line);
        const int needed = std::max(lat_idx, lon_idx);
        if (static_cast<int>(cells.size()) <= needed) {
            ++dropped;
            continue;
        }
        const std::string lat_s = trim(cells[lat_idx]), lon_s = trim(cells[lon_idx]);
        char* end = nullptr;
        const double lat = std::strtod(lat_s.c_str(), &end);
        const bool lat_ok = !lat_s.empty() && end == lat_s.c_str() + lat_s.size();
        const double lon = std::strtod(lon_s.c_str(), &end);
        const bool lon_ok = !lon_s.empty() && end == lon_s.c_str() + lon_s.size();
        if (!lat_ok || !lon_ok || std::abs(lat) > 90.0 || std::abs(lon) > 180.0) {
            ++dropped;
            continue;
        }
        const double phi = lat * kPi / 180.0, lam = lon * kPi / 180.0;
        pts.emplace_back(std::cos(lam) * std::cos(phi), std::sin(lam) * std::cos(phi),
                         std::sin(phi));
    }
    if (pts.empty()) throw McfError("load_geo_csv: no valid rows in " + path);

    auto rng = make_stream(seed, 0);
    std::vector<std::size_t> order(pts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);

    const auto n = pts.size();
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * double(n)));
    Mat train(3, static_cast<Eigen::Index>(n_train));
    Mat val(3, static_cast<Eigen::Index>(n - n_train));
    for (std::size_t i = 0; i < n; ++i) {
        if (i < n_train) {
            train.col(static_cast<Eigen::Index>(i)) = pts[order[i]];
        } else {
            val.col(static_cast<Eigen::Index>(i - n_train)) = pts[order[i]];
        }
    }
    GeoLoadResult res;
    res.dataset = Dataset{PointBatch{train}, PointBatch{val}, 3, "geo_csv", seed,
                          "lat=" + lat_column + ",lon=" + lon_column};
    res.rows_read = rows_read;
    res.rows_dropped = dropped;
    return res;
}

Dataset make_dataset(const std::string& name, int n_train, int n_val, std::uint64_t seed) {
    if (n_train < 1 || n_val < 1) throw McfError("make_dataset: split sizes must be >= 1");
    Dataset ds;
    ds.ambient_dim = 3;
    ds.name = name;
    ds.seed = seed;
    // Validation batches use an offset seed so the splits are disjoint draws.
    if (name == "wrapped_normals_sphere") {
        const auto modes = default_sphere_modes();
        ds.train = sample_wrapped_normals_sphere(n_train, modes, seed);
        ds.val = sample_wrapped_normals_sphere(n_val, modes, seed + 0x9e37);
        ds.layout = "tetrahedral modes, scale 0.2";
    } else if (name == "checkerboard_sphere") {
        ds.train = sample_checkerboard_sphere(n_train, seed);
        ds.val = sample_checkerboard_sphere(n_val, seed + 0x9e37);
        ds.layout = "8 lon x 4 lat cells, |z| <= 0.8";
    } else if (name == "five_gaussians_hyperbolic") {
        ds.train = sample_five_gaussians_hyperbolic(n_train, seed);
        ds.val = sample_five_gaussians_hyperbolic(n_val, seed + 0x9e37);
        ds.layout = "apex + radius-1.3 modes, scale 0.3";
    } else if (name == "checkerboard_hyperbolic") {
        ds.train = sample_checkerboard_hyperbolic(n_train, seed);
        ds.val = sample_checkerboard_hyperbolic(n_val, seed + 0x9e37);
        ds.layout = "4x4 Poincare grid, half-width 0.7/sqrt(2)";
    } else if (name == "lorenz") {
        ds.train = sample_lorenz(n_train, 100, 1000.0, seed);
        ds.val = sample_lorenz(n_val, 20, 1000.0, seed + 0x9e37);
        ds.layout = "sigma=10 rho=28 beta=8/3, dt=0.01";
    } else if (name == "vmf_bimodal") {
        Mat modes(3, 2);
        modes.col(0) = geom::Vec3(0.0, 0.0, 1.0);
        modes.col(1) = geom::Vec3(0.0, 0.0, -1.0);
        Vec kappas(2);
        kappas << 10.0, 10.0;
        ds.train = sample_vmf_mixture(n_train, modes, kappas, seed);
        ds.val = sample_vmf_mixture(n_val, modes, kappas, seed + 0x9e37);
        ds.layout = "modes +-e_z, kappa 10";
    } else {
        throw McfError("make_dataset: unknown dataset '" + name + "'");
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& path_prefix) {
    {
        std::ofstream bin(path_prefix + ".bin", std::ios::binary);
        if (!bin) throw McfError("save_dataset: cannot write " + path_prefix + ".bin");
        auto dump = [&bin](const Mat& m) {
            bin.write(reinterpret_cast<const char*>(m.data()),
                      static_cast<std::streamsize>(sizeof(double) * m.size()));
        };
        dump(ds.train.points);
        dump(ds.val.points);
    }
    nlohmann::json meta;
    meta["name"] = ds.name;
    meta["seed"] = ds.seed;
    meta["ambient_dim"] = ds.ambient_dim;
    meta["n_train"] = ds.train.points.cols();
    meta["n_val"] = ds.val.points.cols();
    meta["layout"] = ds.layout;
    std::ofstream js(path_prefix + ".json");
    if (!js) throw McfError("save_dataset: cannot write " + path_prefix + ".json");
    js << meta.dump(2) << "\n";
}

Dataset load_dataset(const std::string& path_prefix) {
    std::ifstream js(path_prefix + ".json");
    if (!js) throw McfError("load_dataset: cannot open " + path_prefix + ".json");
    nlohmann::json meta = nlohmann::json::parse(js);
    Dataset ds;
    ds.name = meta.at("name").get<std::string>();
    ds.seed = meta.at("seed").get<std::uint64_t>();
    ds.ambient_dim = meta.at("ambient_dim").get<int>();
    ds.layout = meta.value("layout", "");
    const auto n_train = meta.at("n_train").get<Eigen::Index>();
    const auto n_val = meta.at("n_val").get<Eigen::Index>();

    std::ifstream bin(path_prefix + ".bin", std::ios::binary);
    if (!bin) throw McfError("load_dataset: cannot open " + path_prefix + ".bin");
    auto slurp = [&bin, &path_prefix](Eigen::Index rows, Eigen::Index cols) {
        Mat m(rows, cols);
        bin.read(reinterpret_cast<char*>(m.data()),
                 static_cast<std::streamsize>(sizeof(double) * m.size()));
        if (!bin) throw McfError("load_dataset: truncated binary file " + path_prefix + ".bin");
        return m;
    };
    ds.train.points = slurp(ds.ambient_dim, n_train);
    ds.val.points = slurp(ds.ambient_dim, n_val);
    return ds;
}

}  // namespace mcf::data
