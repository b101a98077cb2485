#ifndef SCCDGA_TESTS_ORACLES_HPP
#define SCCDGA_TESTS_ORACLES_HPP

// Slow, independent reference implementations used to cross-check the library.

#include <sccdga/sccdga.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

/// ARI from the pair confusion counts, enumerating every pair of items.
inline double ari_pairs(const std::vector<int>& a, const std::vector<int>& b) {
    double both = 0, only_a = 0, only_b = 0, neither = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            const bool sa = a[i] == a[j];
            const bool sb = b[i] == b[j];
            if (sa && sb) both += 1;
            else if (sa) only_a += 1;
            else if (sb) only_b += 1;
            else neither += 1;
        }
    }
    const double denom = (both + only_a) * (only_a + neither) + (both + only_b) * (only_b + neither);
    if (denom == 0) return 1.0;
    return 2 * (both * neither - only_a * only_b) / denom;
}

/// `2 I / (H_a + H_b)` from joint counts kept in a map, natural log.
inline double nmi_counts(const std::vector<int>& a, const std::vector<int>& b) {
    const double n = static_cast<double>(a.size());
    std::map<int, double> ca, cb;
    std::map<std::pair<int, int>, double> joint;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ca[a[i]] += 1;
        cb[b[i]] += 1;
        joint[{a[i], b[i]}] += 1;
    }
    double ha = 0, hb = 0, mi = 0;
    for (const auto& [k, c] : ca) ha -= c / n * std::log(c / n);
    for (const auto& [k, c] : cb) hb -= c / n * std::log(c / n);
    for (const auto& [k, c] : joint) {
        const double pij = c / n;
        mi += pij * std::log(pij / ((ca[k.first] / n) * (cb[k.second] / n)));
    }
    if (ha + hb == 0) return 0.0;
    return 2 * mi / (ha + hb);
}

/**
 * Type-7 percentile from the definition: walk the sorted sample to the
 * bracketing order statistics of 0-based rank `(n - 1) p` and interpolate.
 */
inline double percentile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double rank = (static_cast<double>(v.size()) - 1) * p;
    std::size_t lo = 0;
    while (static_cast<double>(lo + 1) <= rank) ++lo;
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (rank - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Mean silhouette from explicit loops over all point pairs.
inline double silhouette_loops(const sccdga::Matrix& x, const std::vector<int>& labels) {
    const auto n = static_cast<std::size_t>(x.rows());
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::map<int, std::pair<double, int>> by;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double d = 0;
            for (Eigen::Index c = 0; c < x.cols(); ++c) d += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
            auto& e = by[labels[j]];
            e.first += std::sqrt(d);
            e.second += 1;
        }
        if (!by.count(labels[i])) continue;
        const double a = by[labels[i]].first / by[labels[i]].second;
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [l, e] : by) {
            if (l != labels[i]) b = std::min(b, e.first / e.second);
        }
        total += (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(n);
}

inline std::vector<int> random_labels(std::mt19937_64& rng, std::size_t n, int k) {
    std::uniform_int_distribution<int> d(0, k - 1);
    std::vector<int> out(n);
    for (auto& v : out) v = d(rng);
    return out;
}

/// Tiny instance shared by the gradient and descent checks: 8 cells, 6 genes, dims [4, 3, 2], 2 clusters.
struct ToyInstance {
    sccdga::ModelInputs inputs;
    sccdga::ModelConfig config;
    sccdga::ParamSet params;
    sccdga::Matrix target;
};

inline ToyInstance toy_instance(sccdga::Ablation ablation, std::uint64_t seed = 7) {
    using namespace sccdga;
    ToyInstance t;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    t.inputs.x.resize(8, 6);
    for (Eigen::Index i = 0; i < t.inputs.x.size(); ++i) t.inputs.x.data()[i] = u(rng);
    t.inputs.gene_context.resize(8, 5);
    for (Eigen::Index i = 0; i < t.inputs.gene_context.size(); ++i) t.inputs.gene_context.data()[i] = u(rng) - 1.0;
    t.inputs.graph = knn_graph(pearson_similarity(t.inputs.x), 2);

    t.config.encoder_dims = {4, 3, 2};
    t.config.n_clusters = 2;
    t.config.seed = seed;
    t.config.ablation = ablation;
    t.config.precision = ProductPrecision::double_precision;
    t.params = init_params(t.config, 6, 5);
    // biases are zero after init; give them values so their gradients are exercised
    std::normal_distribution<double> nd(0.0, 0.1);
    for (auto& [name, v] : t.params) {
        if (name.back() == 'b') {
            for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = 0.05 + nd(rng);
        }
    }
    const Matrix z = embed(t.params, t.inputs, t.config);
    Matrix centers(2, z.cols());
    for (Eigen::Index j = 0; j < centers.size(); ++j) centers.data()[j] = u(rng) * 0.5;
    t.params["centers"] = centers;
    t.target = target_distribution(soft_assign(z, centers));
    return t;
}

inline sccdga::LossFunction total_loss(const ToyInstance& t) {
    return [&t](sccdga::Tape& tape, const sccdga::Bindings& b) { return sccdga::record_forward(tape, b, t.inputs, t.config, &t.target).total; };
}

}

#endif
