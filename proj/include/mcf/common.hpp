// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcf {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Arr = Eigen::ArrayXXd;

class McfError : public std::runtime_error {
public:
    explicit McfError(const std::string& what) : std::runtime_error(what) {}
};

/// Deterministic random stream. All sampling goes through explicit streams
/// seeded from a master seed, so identical (seed, n) calls produce identical
/// output regardless of library-internal distribution implementations.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    double uniform() {
        // 53-bit mantissa double in [0, 1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Box-Muller without caching; keeps the engine state the only state.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    Vec normal_vec(int n) {
        Vec v(n);
        for (int i = 0; i < n; ++i) v(i) = normal();
        return v;
    }

    Mat normal_mat(int rows, int cols) {
        Mat m(rows, cols);
        for (int j = 0; j < cols; ++j)
            for (int i = 0; i < rows; ++i) m(i, j) = normal();
        return m;
    }

    /// Uniform integer in [0, n).
    std::uint64_t index(std::uint64_t n) {
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[index(i)]);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

/// Independent stream for a named purpose; adding ids never perturbs
/// existing streams.
inline RandomStream make_stream(std::uint64_t seed, std::uint64_t stream_id) {
    std::mt19937_64 mix(seed ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1)));
    return RandomStream(mix());
}

/// A batch of points in a common space; one column per point.
struct PointBatch {
    Mat points;  // dim x count

    PointBatch() = default;
    explicit PointBatch(Mat p) : points(std::move(p)) {}

    int dim() const { return static_cast<int>(points.rows()); }
    int count() const { return static_cast<int>(points.cols()); }
    Vec point(int i) const { return points.col(i); }
    bool empty() const { return points.cols() == 0; }
};

/// Runs fn(i) for i in [0, n) on up to MCF_NUM_THREADS workers. Results must
/// be written to disjoint slots; the partition is deterministic.
void parallel_for(int n, const std::function<void(int)>& fn);

/// Thread cap from MCF_NUM_THREADS (>=1), defaulting to hardware concurrency.
int eval_thread_count();

}  // namespace mcf
