#ifndef SCCDGA_CELLGRAPH_HPP
#define SCCDGA_CELLGRAPH_HPP

#include "error.hpp"
#include "ingest.hpp"
#include "matrix.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

/**
 * @file cellgraph.hpp
 *
 * @brief Cell-to-cell KNN graph from pairwise Pearson correlation.
 */

namespace sccdga {

/**
 * Symmetric cell-by-cell similarity with unit diagonal.
 */
struct SimilarityMatrix {
    Matrix s;

    Eigen::Index size() const { return s.rows(); }
};

/**
 * Binary symmetric adjacency stored as sorted neighbor lists. Every node lists
 * itself.
 */
struct CellGraph {
    std::vector<std::vector<int>> neighbors;
    int k = 0;

    std::size_t n_nodes() const { return neighbors.size(); }

    bool has_edge(int i, int j) const {
        const auto& nb = neighbors[static_cast<std::size_t>(i)];
        return std::binary_search(nb.begin(), nb.end(), j);
    }

    /// Number of distinct undirected edges excluding self-loops.
    std::size_t n_edges() const {
        std::size_t total = 0;
        for (const auto& nb : neighbors) total += nb.size() - 1;
        return total / 2;
    }

    Matrix dense() const {
        const auto n = static_cast<Eigen::Index>(neighbors.size());
        Matrix a = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (int j : neighbors[static_cast<std::size_t>(i)]) a(i, j) = 1;
        }
        return a;
    }

    /**
     * Graph in which every node is linked only to itself.
     */
    static CellGraph self_loops_only(std::size_t n) {
        CellGraph g;
        g.neighbors.resize(n);
        for (std::size_t i = 0; i < n; ++i) g.neighbors[i] = {static_cast<int>(i)};
        return g;
    }
};

/**
 * Pearson correlation between every pair of cell rows.
 */
inline SimilarityMatrix pearson_similarity(const Matrix& values, const std::vector<std::string>& cell_ids = {}) {
    Matrix centered = values;
    for (Eigen::Index i = 0; i < centered.rows(); ++i) {
        const double mean = centered.row(i).mean();
        centered.row(i).array() -= mean;
        const double norm = centered.row(i).norm();
        if (!(norm > 0)) {
            std::string name = static_cast<std::size_t>(i) < cell_ids.size() ? cell_ids[i] : std::to_string(i);
            throw DomainError("cell '" + name + "' has zero expression variance");
        }
        centered.row(i) /= norm;
    }
    SimilarityMatrix out;
    out.s.noalias() = centered * centered.transpose();
    out.s = out.s.cwiseMax(-1.0).cwiseMin(1.0);
    for (Eigen::Index i = 0; i < out.s.rows(); ++i) {
        for (Eigen::Index j = 0; j < i; ++j) out.s(i, j) = out.s(j, i);
    }
    out.s.diagonal().setOnes();
    return out;
}

inline SimilarityMatrix pearson_similarity(const ExpressionMatrix& x) {
    detail::require_stage(x, Stage::hvg_selected, "pearson_similarity");
    return pearson_similarity(x.values, x.cell_ids);
}

/**
 * Links each cell to its `k` most similar other cells (ties to the lower
 * index), then symmetrizes by union and adds self-loops.
 */
inline CellGraph knn_graph(const SimilarityMatrix& sim, int k = 15) {
    const auto n = static_cast<int>(sim.size());
    if (k < 1 || k >= n) {
        throw DomainError("k must be in [1, n_cells), got k=" + std::to_string(k) + " with " + std::to_string(n) + " cells");
    }

    std::vector<std::vector<char>> linked(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
    std::vector<int> order(static_cast<std::size_t>(n - 1));
    for (int i = 0; i < n; ++i) {
        int pos = 0;
        for (int j = 0; j < n; ++j) {
            if (j != i) order[pos++] = j;
        }
        std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
            const double sa = sim.s(i, a), sb = sim.s(i, b);
            if (sa != sb) return sa > sb;
            return a < b;
        });
        for (int m = 0; m < k; ++m) {
            linked[i][order[m]] = 1;
            linked[order[m]][i] = 1;
        }
        linked[i][i] = 1;
    }

    CellGraph g;
    g.k = k;
    g.neighbors.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (linked[i][j]) g.neighbors[i].push_back(j);
        }
    }
    return g;
}

/**
 * Edge list `i,j` with `i < j`, self-loops omitted.
 */
inline void write_edge_list(const std::filesystem::path& path, const CellGraph& g) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");
    out << "i,j\n";
    for (std::size_t i = 0; i < g.neighbors.size(); ++i) {
        for (int j : g.neighbors[i]) {
            if (static_cast<std::size_t>(j) > i) out << i << ',' << j << '\n';
        }
    }
}

/**
 * Reads an edge list written by `write_edge_list()`, restoring self-loops.
 */
inline CellGraph read_edge_list(const std::filesystem::path& path, std::size_t n_nodes) {
    auto in = detail::open_input(path);
    CellGraph g = CellGraph::self_loops_only(n_nodes);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank(line) || (lineno == 1 && detail::trim(line) == "i,j")) continue;
        auto f = detail::split(line, ',');
        long long i, j;
        if (f.size() != 2 || !detail::parse_index(f[0], i) || !detail::parse_index(f[1], j)) {
            throw ParseError("malformed edge", lineno);
        }
        if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n_nodes || static_cast<std::size_t>(j) >= n_nodes) {
            throw ParseError("edge endpoint out of range", lineno);
        }
        g.neighbors[i].push_back(static_cast<int>(j));
        g.neighbors[j].push_back(static_cast<int>(i));
    }
    for (auto& nb : g.neighbors) {
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
    return g;
}

}

#endif
