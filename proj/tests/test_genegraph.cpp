#include <sccdga/sccdga.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>
#include <tuple>

using namespace sccdga;

namespace {

PpiNetwork network(const std::vector<std::pair<std::string, std::string>>& edges) {
    PpiNetwork net;
    std::set<std::string> nodes;
    for (const auto& [a, b] : edges) {
        net.edges.push_back({std::min(a, b), std::max(a, b), 900});
        nodes.insert(a);
        nodes.insert(b);
    }
    std::sort(net.edges.begin(), net.edges.end(), [](const auto& x, const auto& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
    net.nodes.assign(nodes.begin(), nodes.end());
    return net;
}

PpiNetwork cliques(int size, bool bridge) {
    std::vector<std::pair<std::string, std::string>> edges;
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < size; ++i) {
            for (int j = i + 1; j < size; ++j) edges.push_back({std::string(1, static_cast<char>('A' + c)) + std::to_string(i), std::string(1, static_cast<char>('A' + c)) + std::to_string(j)});
        }
    }
    if (bridge) edges.push_back({"A0", "B0"});
    return network(edges);
}

PpiNetwork random_network(std::mt19937_64& rng, int n, double p) {
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::pair<std::string, std::string>> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (u(rng) < p) edges.push_back({"n" + std::to_string(100 + i), "n" + std::to_string(100 + j)});
        }
    }
    return network(edges);
}

double cosine(const Matrix& v, Eigen::Index a, Eigen::Index b) {
    return v.row(a).dot(v.row(b)) / (v.row(a).norm() * v.row(b).norm());
}

ExpressionMatrix hvg_matrix(const Matrix& values, std::vector<std::string> genes) {
    ExpressionMatrix x;
    x.values = values;
    for (Eigen::Index i = 0; i < values.rows(); ++i) x.cell_ids.push_back("c" + std::to_string(i));
    x.gene_symbols = std::move(genes);
    x.stage = Stage::hvg_selected;
    return x;
}

}

TEST(TransitionWeights, UnbiasedIsUniform) {
    const GeneGraph g(network({{"a", "b"}, {"b", "c"}, {"b", "d"}, {"c", "d"}}));
    const auto w = transition_weights(g, g.id("a"), g.id("b"), 1, 1);
    ASSERT_EQ(w.size(), 3u);
    for (double v : w) EXPECT_NEAR(v, 1.0 / 3, 1e-15);
}

TEST(TransitionWeights, ReturnSharedAndDistant) {
    // from prev=a to cur=b; b's neighbors: a (return), s (shared with a), d (distant)
    const GeneGraph g(network({{"a", "b"}, {"a", "s"}, {"b", "s"}, {"b", "d"}}));
    const auto w = transition_weights(g, g.id("a"), g.id("b"), 4, 0.25);
    const auto& nb = g.neighbors(g.id("b"));
    std::map<std::string, double> by;
    for (std::size_t i = 0; i < nb.size(); ++i) by[g.names()[nb[i]]] = w[i];
    EXPECT_NEAR(by["a"], 0.25 / 5.25, 1e-12);
    EXPECT_NEAR(by["s"], 1.0 / 5.25, 1e-12);
    EXPECT_NEAR(by["d"], 4.0 / 5.25, 1e-12);
    EXPECT_NEAR(by["a"], 0.0476, 1e-4);
    EXPECT_NEAR(by["s"], 0.1905, 1e-4);
    EXPECT_NEAR(by["d"], 0.7619, 1e-4);
}

TEST(TransitionWeights, SingleNeighborForcesReturn) {
    const GeneGraph g(network({{"a", "b"}}));
    const auto w = transition_weights(g, g.id("a"), g.id("b"), 3, 0.5);
    EXPECT_EQ(w, std::vector<double>{1.0});
}

TEST(TransitionWeights, DistributionOnRandomGraphs) {
    std::mt19937_64 rng(6);
    for (int rep = 0; rep < 20; ++rep) {
        const GeneGraph g(random_network(rng, 12, 0.35));
        for (int cur = 0; cur < static_cast<int>(g.size()); ++cur) {
            for (int prev : g.neighbors(cur)) {
                const auto w = transition_weights(g, prev, cur, 0.5 + rep % 4, 0.3 + rep % 3);
                double total = 0;
                for (double v : w) {
                    EXPECT_GE(v, 0);
                    total += v;
                }
                EXPECT_NEAR(total, 1.0, 1e-12);
            }
        }
    }
}

TEST(RandomWalks, PathGraphHasOneWalk) {
    const GeneGraph g(network({{"A", "B"}}));
    WalkParams p;
    p.walks_per_node = 1;
    p.walk_length = 3;
    p.p = 2;
    p.q = 0.5;
    const auto c = random_walks(g, p);
    ASSERT_EQ(c.sequences.size(), 2u);
    EXPECT_EQ(c.sequences[0], (std::vector<int>{g.id("A"), g.id("B"), g.id("A")}));
}

TEST(RandomWalks, SameSeedSameCorpus) {
    std::mt19937_64 rng(1);
    const GeneGraph g(random_network(rng, 20, 0.2));
    WalkParams p;
    p.p = 0.7;
    p.q = 2.0;
    p.seed = 99;
    EXPECT_EQ(random_walks(g, p).sequences, random_walks(g, p).sequences);
    p.seed = 100;
    WalkParams p2 = p;
    p2.seed = 99;
    EXPECT_NE(random_walks(g, p).sequences, random_walks(g, p2).sequences);
}

TEST(RandomWalks, StepsFollowEdges) {
    std::mt19937_64 rng(3);
    const GeneGraph g(random_network(rng, 25, 0.15));
    WalkParams p;
    p.p = 0.25;
    p.q = 4;
    p.walk_length = 30;
    const auto c = random_walks(g, p);
    for (const auto& seq : c.sequences) {
        for (std::size_t i = 1; i < seq.size(); ++i) EXPECT_TRUE(g.adjacent(seq[i - 1], seq[i]));
    }
    for (int iso : c.isolated) EXPECT_TRUE(g.neighbors(iso).empty());
}

TEST(RandomWalks, TriangleFirstStepIsUniform) {
    const GeneGraph g(network({{"a", "b"}, {"b", "c"}, {"a", "c"}}));
    WalkParams p;
    p.walks_per_node = 10000;
    p.walk_length = 2;
    p.seed = 5;
    const auto c = random_walks(g, p);
    for (int start = 0; start < 3; ++start) {
        std::map<int, int> counts;
        int total = 0;
        for (const auto& seq : c.sequences) {
            if (seq[0] != start) continue;
            ++counts[seq[1]];
            ++total;
        }
        ASSERT_EQ(total, 10000);
        const double sd = std::sqrt(total * 0.5 * 0.5);
        for (const auto& [node, n] : counts) EXPECT_LE(std::abs(n - total / 2.0), 3 * sd) << "start " << start << " next " << node;
    }
}

TEST(SkipGram, SoftmaxOfEqualVectorsIsUniform) {
    Matrix v = Matrix::Constant(6, 4, 0.3);
    for (int u = 0; u < 6; ++u) {
        for (int j = 0; j < 6; ++j) EXPECT_NEAR(softmax_conditional(v, u, j), 1.0 / 6, 1e-15);
    }
}

TEST(SkipGram, CliquesSeparate) {
    const GeneGraph g(cliques(5, true));
    WalkParams wp;
    wp.seed = 1;
    wp.walk_length = 20;
    SkipGramParams sg;
    sg.dim = 16;
    sg.window = 3;
    sg.seed = 1;
    const auto e = train_skipgram(random_walks(g, wp), sg);
    double intra = 0, inter = 0;
    int ni = 0, nx = 0;
    for (Eigen::Index a = 0; a < 10; ++a) {
        for (Eigen::Index b = a + 1; b < 10; ++b) {
            const bool same = e.genes[a][0] == e.genes[b][0];
            (same ? intra : inter) += cosine(e.vectors, a, b);
            ++(same ? ni : nx);
        }
    }
    EXPECT_GT(intra / ni, inter / nx);
}

TEST(SkipGram, ExactSoftmaxLossNeverIncreases) {
    const GeneGraph g(network({{"a", "b"}, {"b", "c"}, {"c", "a"}, {"c", "d"}, {"d", "e"}, {"e", "f"}, {"f", "d"}}));
    WalkParams wp;
    wp.walk_length = 10;
    wp.seed = 2;
    SkipGramParams sg;
    sg.dim = 8;
    sg.window = 2;
    sg.epochs = 200;
    sg.lr = 0.01;
    sg.exact_softmax = true;
    sg.seed = 2;
    const auto e = train_skipgram(random_walks(g, wp), sg);
    ASSERT_EQ(e.loss_trace.size(), 200u);
    for (std::size_t i = 1; i < e.loss_trace.size(); ++i) EXPECT_LE(e.loss_trace[i], e.loss_trace[i - 1] + 1e-6);
}

TEST(SkipGram, ExactSoftmaxGradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(4);
    Matrix v = Matrix::Random(5, 3);
    const std::vector<std::pair<int, int>> pairs{{0, 1}, {1, 0}, {1, 2}, {2, 3}, {3, 4}, {4, 0}, {2, 2}};
    Matrix grad;
    detail::exact_softmax_loss(v, pairs, &grad);
    const double eps = 1e-6;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        Matrix up = v, down = v;
        up.data()[i] += eps;
        down.data()[i] -= eps;
        const double numeric = (detail::exact_softmax_loss(up, pairs, nullptr) - detail::exact_softmax_loss(down, pairs, nullptr)) / (2 * eps);
        EXPECT_NEAR(grad.data()[i], numeric, 1e-7);
    }
}

TEST(SkipGram, ReproducibleBitForBit) {
    const GeneGraph g(cliques(4, true));
    WalkParams wp;
    wp.seed = 3;
    SkipGramParams sg;
    sg.dim = 8;
    sg.seed = 3;
    const auto corpus = random_walks(g, wp);
    const auto a = train_skipgram(corpus, sg);
    const auto b = train_skipgram(corpus, sg);
    EXPECT_EQ(a.vectors, b.vectors);
    EXPECT_EQ(a.loss_trace, b.loss_trace);
}

TEST(SkipGram, IsolatedNodesGetZeroRows) {
    auto net = network({{"a", "b"}, {"b", "c"}});
    net.nodes.push_back("lonely");
    const GeneGraph g(net);
    SkipGramParams sg;
    sg.dim = 4;
    const auto e = train_skipgram(random_walks(g, {}), sg);
    EXPECT_EQ(e.vectors.row(e.find("lonely")).squaredNorm(), 0.0);
    EXPECT_GT(e.vectors.row(e.find("a")).squaredNorm(), 0.0);
}

TEST(ProjectToCells, SingleGeneRowEqualsItsVector) {
    GeneEmbeddings e;
    e.genes = {"g1", "g2"};
    e.vectors.resize(2, 3);
    e.vectors << 1, 2, 3, 4, 5, 6;
    Matrix x(1, 2);
    x << 0, 7;
    const auto g = project_to_cells(hvg_matrix(x, {"g1", "g2"}), e);
    EXPECT_TRUE(g.g.row(0).isApprox(e.vectors.row(1)));
}

TEST(ProjectToCells, IdenticalVectorsGiveThatVector) {
    GeneEmbeddings e;
    e.genes = {"a", "b", "c"};
    e.vectors = Matrix::Constant(3, 2, 0.0);
    e.vectors.col(0).setConstant(1.5);
    e.vectors.col(1).setConstant(-0.5);
    Matrix x(3, 3);
    x << 1, 2, 3, 0, 0, 0, 0, 9, 0.5;
    const auto g = project_to_cells(hvg_matrix(x, {"a", "b", "c"}), e);
    EXPECT_NEAR(g.g(0, 0), 1.5, 1e-14);
    EXPECT_NEAR(g.g(0, 1), -0.5, 1e-14);
    EXPECT_EQ(g.g.row(1).squaredNorm(), 0.0);
    EXPECT_NEAR(g.g(2, 0), 1.5, 1e-14);
}

TEST(ProjectToCells, WeightedAverage) {
    GeneEmbeddings e;
    e.genes = {"a", "b"};
    e.vectors.resize(2, 2);
    e.vectors << 1, 0, 0, 1;
    Matrix x(1, 2);
    x << 1, 3;
    const auto g = project_to_cells(hvg_matrix(x, {"a", "b"}), e);
    EXPECT_NEAR(g.g(0, 0), 0.25, 1e-15);
    EXPECT_NEAR(g.g(0, 1), 0.75, 1e-15);
}

TEST(ProjectToCells, RowsInsideCoordinateHull) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    GeneEmbeddings e;
    for (int j = 0; j < 8; ++j) e.genes.push_back("g" + std::to_string(j));
    e.vectors = Matrix::Random(8, 5);
    Matrix x(20, 8);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng) < 0.4 ? 0.0 : u(rng);
    const auto g = project_to_cells(hvg_matrix(x, e.genes), e);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (x.row(i).sum() == 0) continue;
        for (Eigen::Index d = 0; d < 5; ++d) {
            double lo = 1e9, hi = -1e9;
            for (Eigen::Index j = 0; j < 8; ++j) {
                if (x(i, j) == 0) continue;
                lo = std::min(lo, e.vectors(j, d));
                hi = std::max(hi, e.vectors(j, d));
            }
            EXPECT_GE(g.g(i, d), lo - 1e-12);
            EXPECT_LE(g.g(i, d), hi + 1e-12);
        }
    }
}

TEST(GeneEmbeddingsFile, RoundTrip) {
    GeneEmbeddings e;
    e.genes = {"x", "y"};
    e.vectors = Matrix::Random(2, 3);
    const auto path = std::filesystem::temp_directory_path() / "sccdga_gene_vectors.csv";
    write_embeddings(path, e);
    const auto back = load_embeddings(path);
    std::filesystem::remove(path);
    EXPECT_EQ(back.genes, e.genes);
    EXPECT_EQ(back.vectors, e.vectors);
}
