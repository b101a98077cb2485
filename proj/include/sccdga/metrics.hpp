#ifndef SCCDGA_METRICS_HPP
#define SCCDGA_METRICS_HPP

#include "error.hpp"
#include "matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

/**
 * @file metrics.hpp
 *
 * @brief Adjusted Rand index, normalized mutual information and silhouette
 * coefficient.
 *
 * Label vectors are arbitrary integers; they are compacted internally, so the
 * scores are invariant to relabeling.
 */

namespace sccdga {

/**
 * Class-by-cluster co-occurrence counts.
 */
struct ContingencyTable {
    std::vector<std::vector<long long>> counts;
    std::vector<long long> row_sums;
    std::vector<long long> col_sums;
    long long total = 0;

    ContingencyTable(const std::vector<int>& truth, const std::vector<int>& pred) {
        if (truth.size() != pred.size()) {
            throw DomainError("label vectors differ in length: " + std::to_string(truth.size()) + " vs " + std::to_string(pred.size()));
        }
        auto rows = compact(truth);
        auto cols = compact(pred);
        counts.assign(rows.second, std::vector<long long>(cols.second, 0));
        row_sums.assign(rows.second, 0);
        col_sums.assign(cols.second, 0);
        for (std::size_t i = 0; i < truth.size(); ++i) {
            ++counts[rows.first[i]][cols.first[i]];
            ++row_sums[rows.first[i]];
            ++col_sums[cols.first[i]];
        }
        total = static_cast<long long>(truth.size());
    }

private:
    static std::pair<std::vector<std::size_t>, std::size_t> compact(const std::vector<int>& labels) {
        std::map<int, std::size_t> codes;
        for (int l : labels) codes.emplace(l, 0);
        std::size_t next = 0;
        for (auto& [l, c] : codes) c = next++;
        std::vector<std::size_t> out;
        out.reserve(labels.size());
        for (int l : labels) out.push_back(codes[l]);
        return {out, codes.size()};
    }
};

namespace detail {

inline double choose2(long long n) {
    return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
}

}

/**
 * Adjusted Rand index by pair counting. Returns 1 when both partitions are
 * identical up to relabeling, including the degenerate case where the
 * expected and maximum indices coincide.
 */
inline double ari(const std::vector<int>& truth, const std::vector<int>& pred) {
    if (truth.size() != pred.size()) {
        throw DomainError("label vectors differ in length: " + std::to_string(truth.size()) + " vs " + std::to_string(pred.size()));
    }
    if (truth.size() < 2) throw DomainError("ARI needs at least 2 items");
    ContingencyTable t(truth, pred);
    double index = 0, sum_a = 0, sum_b = 0;
    for (const auto& row : t.counts) {
        for (auto c : row) index += detail::choose2(c);
    }
    for (auto a : t.row_sums) sum_a += detail::choose2(a);
    for (auto b : t.col_sums) sum_b += detail::choose2(b);
    // scaled by C(n, 2) so every term is an integer or half-integer and exact
    const double pairs = detail::choose2(t.total);
    const double numerator = index * pairs - sum_a * sum_b;
    const double denominator = 0.5 * (sum_a + sum_b) * pairs - sum_a * sum_b;
    if (denominator == 0) return 1.0;
    return numerator / denominator;
}

/**
 * `2 MI(U, V) / (H(U) + H(V))` with natural-log entropies. Defined as 0 when
 * both entropies vanish.
 */
inline double nmi(const std::vector<int>& truth, const std::vector<int>& pred) {
    ContingencyTable t(truth, pred);
    if (t.total == 0) throw DomainError("NMI of empty labelings");
    const double n = static_cast<double>(t.total);
    auto entropy = [n](const std::vector<long long>& sums) {
        double h = 0;
        for (auto s : sums) {
            if (s > 0) h -= (s / n) * std::log(s / n);
        }
        return h;
    };
    const double hu = entropy(t.row_sums);
    const double hv = entropy(t.col_sums);
    double mi = 0;
    for (std::size_t i = 0; i < t.counts.size(); ++i) {
        for (std::size_t j = 0; j < t.counts[i].size(); ++j) {
            const auto c = t.counts[i][j];
            if (c == 0) continue;
            mi += (c / n) * std::log(c * n / (static_cast<double>(t.row_sums[i]) * static_cast<double>(t.col_sums[j])));
        }
    }
    if (hu + hv == 0) return 0.0;
    return std::clamp(2 * mi / (hu + hv), 0.0, 1.0);
}

/**
 * Per-point silhouette values with Euclidean distances. A point alone in its
 * cluster scores 0.
 */
inline std::vector<double> silhouette_values(const Matrix& points, const std::vector<int>& labels) {
    const auto n = points.rows();
    if (static_cast<std::size_t>(n) != labels.size()) {
        throw DomainError("silhouette: " + std::to_string(n) + " points but " + std::to_string(labels.size()) + " labels");
    }
    std::map<int, int> codes;
    for (int l : labels) codes.emplace(l, 0);
    if (codes.size() < 2) throw DomainError("silhouette needs at least 2 clusters");
    int next = 0;
    for (auto& [l, c] : codes) c = next++;
    const auto k = static_cast<Eigen::Index>(codes.size());
    std::vector<int> lab(labels.size());
    std::vector<double> sizes(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        lab[i] = codes[labels[i]];
        ++sizes[lab[i]];
    }

    Matrix dist(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        dist(i, i) = 0;
        for (Eigen::Index j = i + 1; j < n; ++j) dist(i, j) = dist(j, i) = (points.row(i) - points.row(j)).norm();
    }

    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    std::vector<double> sums(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < n; ++i) {
        std::fill(sums.begin(), sums.end(), 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            sums[lab[j]] += dist(i, j);
        }
        const int own = lab[i];
        if (sizes[own] <= 1) continue;
        const double a = sums[own] / (sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < k; ++c) {
            if (c != own) b = std::min(b, sums[c] / sizes[c]);
        }
        const double denom = std::max(a, b);
        out[i] = denom > 0 ? (b - a) / denom : 0.0;
    }
    return out;
}

/// Mean of `silhouette_values()`.
inline double silhouette(const Matrix& points, const std::vector<int>& labels) {
    const auto v = silhouette_values(points, labels);
    double total = 0;
    for (double s : v) total += s;
    return total / static_cast<double>(v.size());
}

}

#endif
