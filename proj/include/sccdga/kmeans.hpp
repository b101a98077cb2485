#ifndef SCCDGA_KMEANS_HPP
#define SCCDGA_KMEANS_HPP

#include "error.hpp"
#include "matrix.hpp"

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

/**
 * @file kmeans.hpp
 *
 * @brief k-means++ seeding and Lloyd iterations.
 */

namespace sccdga {

struct KmeansOptions {
    int max_iterations = 300;
    /// Stop once no center moves by more than this (Euclidean).
    double tolerance = 1e-6;
    /// Independent seedings; the lowest-inertia solution is kept.
    int restarts = 10;
    std::uint64_t seed = 0;
};

struct KmeansResult {
    Matrix centers;
    std::vector<int> labels;
    double inertia = 0;
    int iterations = 0;
};

namespace detail {

inline int nearest_center(const Matrix& points, Eigen::Index i, const Matrix& centers, double& best) {
    best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Eigen::Index j = 0; j < centers.rows(); ++j) {
        const double d = (points.row(i) - centers.row(j)).squaredNorm();
        if (d < best) {
            best = d;
            arg = static_cast<int>(j);
        }
    }
    return arg;
}

inline Matrix kmeanspp_seed(const Matrix& points, int k, std::mt19937_64& rng) {
    const auto n = points.rows();
    Matrix centers(k, points.cols());
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centers.row(0) = points.row(first(rng));
    std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    for (int c = 1; c < k; ++c) {
        double total = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], (points.row(i) - centers.row(c - 1)).squaredNorm());
            total += d2[i];
        }
        Eigen::Index pick = 0;
        if (total > 0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double r = u(rng);
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (r < d2[i]) {
                    pick = i;
                    break;
                }
                r -= d2[i];
            }
        } else {
            pick = first(rng);
        }
        centers.row(c) = points.row(pick);
    }
    return centers;
}

inline KmeansResult lloyd(const Matrix& points, Matrix centers, const KmeansOptions& opt) {
    const auto n = points.rows();
    const auto k = centers.rows();
    KmeansResult res;
    res.labels.assign(static_cast<std::size_t>(n), 0);
    for (res.iterations = 1; res.iterations <= opt.max_iterations; ++res.iterations) {
        double dummy;
        for (Eigen::Index i = 0; i < n; ++i) res.labels[i] = nearest_center(points, i, centers, dummy);
        Matrix next = Matrix::Zero(k, points.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            next.row(res.labels[i]) += points.row(i);
            ++counts[res.labels[i]];
        }
        double shift = 0;
        for (Eigen::Index j = 0; j < k; ++j) {
            if (counts[j] > 0) {
                next.row(j) /= counts[j];
            } else {
                next.row(j) = centers.row(j);
            }
            shift = std::max(shift, (next.row(j) - centers.row(j)).norm());
        }
        centers = std::move(next);
        if (shift < opt.tolerance) break;
    }
    res.iterations = std::min(res.iterations, opt.max_iterations);
    res.inertia = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double d;
        res.labels[i] = nearest_center(points, i, centers, d);
        res.inertia += d;
    }
    res.centers = std::move(centers);
    return res;
}

}

/**
 * Clusters the rows of `points` into `k` groups. Each restart seeds with
 * k-means++ and runs Lloyd iterations; the lowest inertia wins (earliest
 * restart on ties).
 */
inline KmeansResult kmeans(const Matrix& points, int k, const KmeansOptions& opt = {}) {
    if (k < 1) throw DomainError("number of clusters must be positive");
    if (k > points.rows()) {
        throw DomainError("cannot form " + std::to_string(k) + " clusters from " + std::to_string(points.rows()) + " points");
    }
    std::mt19937_64 rng(opt.seed);
    KmeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, opt.restarts); ++r) {
        auto res = detail::lloyd(points, detail::kmeanspp_seed(points, k, rng), opt);
        if (res.inertia < best.inertia) best = std::move(res);
    }
    return best;
}

}

#endif
