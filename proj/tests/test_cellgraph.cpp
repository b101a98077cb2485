#include <sccdga/sccdga.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace sccdga;

namespace {

SimilarityMatrix sim_from(const Matrix& s) {
    SimilarityMatrix out;
    out.s = s;
    return out;
}

double pearson_direct(const std::vector<double>& a, const std::vector<double>& b) {
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(a.size());
    mb /= static_cast<double>(b.size());
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

Matrix random_similarity(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(-1, 1);
    Matrix s(n, n);
    for (int i = 0; i < n; ++i) {
        s(i, i) = 1;
        for (int j = i + 1; j < n; ++j) s(i, j) = s(j, i) = u(rng);
    }
    return s;
}

}

TEST(PearsonSimilarity, IdenticalAndNegatedRows) {
    Matrix x(3, 4);
    x << 1, 5, 2, 8, 1, 5, 2, 8, -1, -5, -2, -8;
    const auto s = pearson_similarity(x);
    EXPECT_NEAR(s.s(0, 1), 1.0, 1e-12);
    EXPECT_NEAR(s.s(0, 2), -1.0, 1e-12);
    EXPECT_EQ(s.s(1, 1), 1.0);
}

TEST(PearsonSimilarity, HandValue) {
    Matrix x(2, 3);
    x << 1, 2, 3, 1, 2, 4;
    EXPECT_NEAR(pearson_similarity(x).s(0, 1), 0.9820, 1e-4);
    EXPECT_NEAR(pearson_similarity(x).s(0, 1), pearson_direct({1, 2, 3}, {1, 2, 4}), 1e-12);
}

TEST(PearsonSimilarity, MatchesDirectFormulaAndIsSymmetric) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 10);
    Matrix x(9, 7);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    const auto s = pearson_similarity(x);
    for (int i = 0; i < 9; ++i) {
        for (int j = 0; j < 9; ++j) {
            std::vector<double> a(x.row(i).data(), x.row(i).data() + 7), b(x.row(j).data(), x.row(j).data() + 7);
            EXPECT_NEAR(s.s(i, j), pearson_direct(a, b), 1e-12);
            EXPECT_EQ(s.s(i, j), s.s(j, i));
        }
    }
}

TEST(PearsonSimilarity, ConstantRowNamesTheCell) {
    ExpressionMatrix x;
    x.values = Matrix::Ones(2, 3);
    x.values(0, 1) = 2;
    x.cell_ids = {"good", "flat"};
    x.gene_symbols = {"a", "b", "c"};
    x.stage = Stage::hvg_selected;
    try {
        pearson_similarity(x);
        FAIL();
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("flat"), std::string::npos);
    }
}

TEST(KnnGraph, ThreeCellUnion) {
    Matrix s(3, 3);
    s << 1, 0.9, 0.1, 0.9, 1, 0.2, 0.1, 0.2, 1;
    const auto g = knn_graph(sim_from(s), 1);
    EXPECT_EQ(g.neighbors[0], (std::vector<int>{0, 1}));
    EXPECT_EQ(g.neighbors[1], (std::vector<int>{0, 1, 2}));
    EXPECT_EQ(g.neighbors[2], (std::vector<int>{1, 2}));
    EXPECT_EQ(g.n_edges(), 2u);
}

TEST(KnnGraph, SaturatedIsComplete) {
    std::mt19937_64 rng(1);
    const auto g = knn_graph(sim_from(random_similarity(rng, 6)), 5);
    EXPECT_EQ(g.dense(), Matrix::Ones(6, 6));
}

TEST(KnnGraph, TieGoesToLowerIndex) {
    // cells 1 and 2 are equally similar to cell 0 and prefer each other
    Matrix s(3, 3);
    s << 1, 0.5, 0.5, 0.5, 1, 0.9, 0.5, 0.9, 1;
    const auto g = knn_graph(sim_from(s), 1);
    EXPECT_TRUE(g.has_edge(0, 1));
    EXPECT_FALSE(g.has_edge(0, 2));
    EXPECT_TRUE(g.has_edge(1, 2));
}

TEST(KnnGraph, RejectsBadK) {
    std::mt19937_64 rng(1);
    const auto s = sim_from(random_similarity(rng, 4));
    EXPECT_THROW(knn_graph(s, 0), DomainError);
    EXPECT_THROW(knn_graph(s, 4), DomainError);
}

TEST(KnnGraph, SymmetricWithDiagonalAndMinimumDegree) {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 30; ++rep) {
        const int n = 5 + rep % 20;
        const int k = 1 + rep % (n - 1);
        const auto g = knn_graph(sim_from(random_similarity(rng, n)), k);
        const Matrix a = g.dense();
        EXPECT_EQ(a, a.transpose());
        for (int i = 0; i < n; ++i) {
            EXPECT_EQ(a(i, i), 1);
            EXPECT_GE(g.neighbors[i].size() - 1, static_cast<std::size_t>(k));
            EXPECT_TRUE(std::is_sorted(g.neighbors[i].begin(), g.neighbors[i].end()));
        }
    }
}

TEST(KnnGraph, DependsOnlyOnRanking) {
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 20; ++rep) {
        Matrix s = random_similarity(rng, 15);
        Matrix t = s.unaryExpr([](double v) { return std::exp(3 * v) - 7; });
        t.diagonal().setConstant(123.0);
        EXPECT_EQ(knn_graph(sim_from(s), 4).neighbors, knn_graph(sim_from(t), 4).neighbors);
    }
}

TEST(KnnGraph, EdgeListRoundTrip) {
    std::mt19937_64 rng(2);
    const auto g = knn_graph(sim_from(random_similarity(rng, 12)), 3);
    const auto path = std::filesystem::temp_directory_path() / "sccdga_edges_roundtrip.csv";
    write_edge_list(path, g);
    const auto h = read_edge_list(path, 12);
    std::filesystem::remove(path);
    EXPECT_EQ(h.neighbors, g.neighbors);
}
