#ifndef SCCDGA_GENEGRAPH_HPP
#define SCCDGA_GENEGRAPH_HPP

#include "error.hpp"
#include "ingest.hpp"
#include "matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

/**
 * @file genegraph.hpp
 *
 * @brief node2vec embedding of the PPI network and projection of the gene
 * vectors into per-cell features.
 *
 * Walks are second-order biased random walks controlled by the return
 * parameter `p` and the in-out parameter `q`. The walk corpus trains a
 * skip-gram model, by default with negative sampling; an exact-softmax
 * trainer is kept for small graphs as a reference.
 */

namespace sccdga {

/**
 * Adjacency-list view of a `PpiNetwork` with integer node IDs in the order
 * of `PpiNetwork::nodes`.
 */
class GeneGraph {
public:
    GeneGraph() = default;

    explicit GeneGraph(const PpiNetwork& net) : names_(net.nodes) {
        for (std::size_t i = 0; i < names_.size(); ++i) index_.emplace(names_[i], static_cast<int>(i));
        adjacency_.resize(names_.size());
        for (const auto& e : net.edges) {
            const int a = id(e.a), b = id(e.b);
            adjacency_[a].push_back(b);
            adjacency_[b].push_back(a);
        }
        for (auto& nb : adjacency_) {
            std::sort(nb.begin(), nb.end());
            nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
        }
    }

    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<int>& neighbors(int node) const { return adjacency_.at(static_cast<std::size_t>(node)); }

    bool adjacent(int a, int b) const {
        const auto& nb = neighbors(a);
        return std::binary_search(nb.begin(), nb.end(), b);
    }

    int id(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw DomainError("gene '" + name + "' is not in the network");
        return it->second;
    }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, int> index_;
    std::vector<std::vector<int>> adjacency_;
};

struct WalkParams {
    double p = 1.0;
    double q = 1.0;
    int walks_per_node = 10;
    int walk_length = 80;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(p > 0) || !(q > 0)) throw DomainError("walk parameters p and q must be positive");
        if (walks_per_node < 1) throw DomainError("walks_per_node must be at least 1");
        if (walk_length < 2) throw DomainError("walk_length must be at least 2");
    }
};

/**
 * Normalized probabilities of stepping from `cur` to each entry of
 * `graph.neighbors(cur)`, given the walk arrived from `prev`. Unnormalized
 * weights are `1/p` for returning to `prev`, 1 for neighbors shared with
 * `prev`, and `1/q` otherwise.
 */
inline std::vector<double> transition_weights(const GeneGraph& graph, int prev, int cur, double p, double q) {
    const auto& nb = graph.neighbors(cur);
    if (nb.empty()) {
        throw DomainError("node '" + graph.names()[cur] + "' has no neighbors");
    }
    if (!graph.adjacent(prev, cur)) {
        throw DomainError("previous node '" + graph.names()[prev] + "' is not adjacent to '" + graph.names()[cur] + "'");
    }
    std::vector<double> w(nb.size());
    double total = 0;
    for (std::size_t i = 0; i < nb.size(); ++i) {
        if (nb[i] == prev) {
            w[i] = 1.0 / p;
        } else if (graph.adjacent(nb[i], prev)) {
            w[i] = 1.0;
        } else {
            w[i] = 1.0 / q;
        }
        total += w[i];
    }
    for (auto& v : w) v /= total;
    return w;
}

struct WalkCorpus {
    std::vector<std::vector<int>> sequences;
    /// Node names indexed by the IDs used in `sequences`.
    std::vector<std::string> node_names;
    /// Nodes without neighbors; no walks start from them.
    std::vector<int> isolated;
};

namespace detail {

inline std::mt19937_64 walk_rng(std::uint64_t seed, int node, int walk) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(node), static_cast<std::uint32_t>(walk)};
    return std::mt19937_64(seq);
}

inline double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(n));
}

}

/**
 * `walks_per_node` walks of length `walk_length` from every non-isolated node.
 * Each (node, walk) pair has its own generator derived from `params.seed`, so
 * the corpus does not depend on evaluation order.
 */
inline WalkCorpus random_walks(const GeneGraph& graph, const WalkParams& params) {
    params.validate();
    if (graph.size() == 0) throw DomainError("cannot walk an empty network");

    WalkCorpus corpus;
    corpus.node_names = graph.names();
    const bool unbiased = params.p == 1.0 && params.q == 1.0;

    for (int start = 0; start < static_cast<int>(graph.size()); ++start) {
        if (graph.neighbors(start).empty()) {
            corpus.isolated.push_back(start);
            continue;
        }
        for (int w = 0; w < params.walks_per_node; ++w) {
            auto rng = detail::walk_rng(params.seed, start, w);
            std::vector<int> seq;
            seq.reserve(static_cast<std::size_t>(params.walk_length));
            seq.push_back(start);
            while (static_cast<int>(seq.size()) < params.walk_length) {
                const int cur = seq.back();
                const auto& nb = graph.neighbors(cur);
                if (seq.size() == 1 || unbiased) {
                    seq.push_back(nb[detail::uniform_index(rng, nb.size())]);
                    continue;
                }
                const auto probs = transition_weights(graph, seq[seq.size() - 2], cur, params.p, params.q);
                double r = detail::unit_uniform(rng);
                std::size_t pick = probs.size() - 1;
                for (std::size_t i = 0; i < probs.size(); ++i) {
                    if (r < probs[i]) {
                        pick = i;
                        break;
                    }
                    r -= probs[i];
                }
                seq.push_back(nb[pick]);
            }
            corpus.sequences.push_back(std::move(seq));
        }
    }
    return corpus;
}

inline void write_corpus(const std::filesystem::path& path, const WalkCorpus& corpus) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");
    for (const auto& seq : corpus.sequences) {
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (i) out << ' ';
            out << corpus.node_names[seq[i]];
        }
        out << '\n';
    }
}

struct SkipGramParams {
    int dim = 128;
    int window = 10;
    int negatives = 5;
    int epochs = 5;
    double lr = 0.025;
    std::uint64_t seed = 0;
    /// Full-softmax gradient descent on the walk pairs instead of negative sampling.
    bool exact_softmax = false;
};

/**
 * Gene vectors keyed by symbol. Genes that never appear in a walk have zero rows.
 */
struct GeneEmbeddings {
    Matrix vectors;
    std::vector<std::string> genes;
    /// Mean training loss per epoch.
    std::vector<double> loss_trace;

    int dim() const { return static_cast<int>(vectors.cols()); }

    /// Row of `symbol`, or -1.
    Eigen::Index find(const std::string& symbol) const {
        auto it = std::find(genes.begin(), genes.end(), symbol);
        return it == genes.end() ? -1 : static_cast<Eigen::Index>(it - genes.begin());
    }
};

/**
 * Probability of context `j` given center `u` under a softmax over inner
 * products with every node vector.
 */
inline double softmax_conditional(const Matrix& vectors, Eigen::Index u, Eigen::Index j) {
    const Vector scores = vectors * vectors.row(u).transpose();
    const double m = scores.maxCoeff();
    const double denom = (scores.array() - m).exp().sum();
    return std::exp(scores(j) - m) / denom;
}

namespace detail {

inline std::vector<std::pair<int, int>> window_pairs(const WalkCorpus& corpus, int window) {
    std::vector<std::pair<int, int>> pairs;
    for (const auto& seq : corpus.sequences) {
        const int len = static_cast<int>(seq.size());
        for (int i = 0; i < len; ++i) {
            for (int j = std::max(0, i - window); j <= std::min(len - 1, i + window); ++j) {
                if (j != i) pairs.emplace_back(seq[i], seq[j]);
            }
        }
    }
    return pairs;
}

/// Mean negative log-likelihood of the pairs under the full softmax, and optionally its gradient.
inline double exact_softmax_loss(const Matrix& v, const std::vector<std::pair<int, int>>& pairs, Matrix* grad) {
    const Matrix scores = v * v.transpose();
    const Eigen::Index n = v.rows();
    Matrix probs(n, n);
    Vector lse(n);
    for (Eigen::Index u = 0; u < n; ++u) {
        const double m = scores.row(u).maxCoeff();
        const double s = (scores.row(u).array() - m).exp().sum();
        lse(u) = m + std::log(s);
        probs.row(u) = (scores.row(u).array() - lse(u)).exp();
    }

    // dL/dscore[u][k] accumulated over pairs, then pushed through score = v_k . v_u.
    Matrix dscore = Matrix::Zero(n, n);
    double loss = 0;
    for (auto [u, j] : pairs) {
        loss += lse(u) - scores(u, j);
        if (grad) {
            dscore.row(u) += probs.row(u);
            dscore(u, j) -= 1.0;
        }
    }
    const double scale = 1.0 / static_cast<double>(pairs.size());
    if (grad) {
        dscore *= scale;
        *grad = dscore * v + dscore.transpose() * v;
    }
    return loss * scale;
}

inline void init_vectors(Matrix& v, int dim, std::mt19937_64& rng) {
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        for (Eigen::Index d = 0; d < v.cols(); ++d) v(i, d) = (unit_uniform(rng) - 0.5) / dim;
    }
}

inline double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

}

/**
 * Trains node vectors on the walk corpus.
 *
 * Negative sampling follows the usual word2vec recipe: per center position a
 * window shrunk by a random amount, noise drawn from unigram counts raised to
 * 0.75, and a learning rate decayed linearly over all epochs. Sequence order
 * is reshuffled each epoch from `params.seed`.
 *
 * With `exact_softmax`, one full-batch gradient step per epoch is taken on the
 * mean softmax negative log-likelihood of all window pairs, using a single
 * shared vector per node. Limited to 2000 nodes.
 */
inline GeneEmbeddings train_skipgram(const WalkCorpus& corpus, const SkipGramParams& params = {}) {
    if (params.dim <= 0) throw DomainError("embedding dimension must be positive");
    if (params.window < 1) throw DomainError("window must be at least 1");
    if (params.epochs < 1) throw DomainError("epochs must be at least 1");
    if (corpus.sequences.empty()) throw DomainError("walk corpus is empty");

    const auto n = static_cast<Eigen::Index>(corpus.node_names.size());
    const int dim = params.dim;
    std::mt19937_64 rng(params.seed);

    GeneEmbeddings out;
    out.genes = corpus.node_names;
    Matrix syn0(n, dim);
    detail::init_vectors(syn0, dim, rng);

    std::vector<double> counts(static_cast<std::size_t>(n), 0.0);
    std::size_t total_tokens = 0;
    for (const auto& seq : corpus.sequences) {
        for (int t : seq) counts[t] += 1;
        total_tokens += seq.size();
    }

    if (params.exact_softmax) {
        if (n > 2000) throw DomainError("exact softmax is limited to 2000 nodes");
        const auto pairs = detail::window_pairs(corpus, params.window);
        Matrix grad;
        for (int epoch = 0; epoch < params.epochs; ++epoch) {
            out.loss_trace.push_back(detail::exact_softmax_loss(syn0, pairs, &grad));
            syn0 -= params.lr * grad;
        }
    } else {
        if (params.negatives < 1) throw DomainError("negatives must be at least 1");
        using FloatRows = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        FloatRows in_vec = syn0.cast<float>();
        FloatRows out_vec = FloatRows::Zero(n, dim);

        // unigram^0.75 lookup table, as in word2vec
        const std::size_t table_size = std::max<std::size_t>(100000, static_cast<std::size_t>(n) * 100);
        std::vector<int> table(table_size);
        {
            double norm = 0;
            for (double c : counts) norm += std::pow(c, 0.75);
            std::size_t pos = 0;
            double cum = 0;
            for (Eigen::Index w = 0; w < n && pos < table_size; ++w) {
                cum += std::pow(counts[static_cast<std::size_t>(w)], 0.75) / norm;
                const auto until = std::min(table_size, static_cast<std::size_t>(std::llround(cum * static_cast<double>(table_size))));
                for (; pos < until; ++pos) table[pos] = static_cast<int>(w);
            }
            for (; pos < table_size; ++pos) table[pos] = static_cast<int>(n - 1);
        }

        std::vector<std::size_t> order(corpus.sequences.size());
        std::iota(order.begin(), order.end(), 0);
        const double total_work = static_cast<double>(params.epochs) * static_cast<double>(total_tokens) + 1;
        double processed = 0;
        Eigen::VectorXf neu1e(dim);

        for (int epoch = 0; epoch < params.epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng);
            double epoch_loss = 0;
            std::size_t epoch_pairs = 0;
            for (auto s : order) {
                const auto& seq = corpus.sequences[s];
                const int len = static_cast<int>(seq.size());
                for (int i = 0; i < len; ++i, processed += 1) {
                    const auto alpha = static_cast<float>(params.lr * std::max(1e-4, 1.0 - processed / total_work));
                    const int shrink = static_cast<int>(detail::uniform_index(rng, static_cast<std::size_t>(params.window)));
                    const int center = seq[i];
                    for (int j = std::max(0, i - params.window + shrink); j <= std::min(len - 1, i + params.window - shrink); ++j) {
                        if (j == i) continue;
                        neu1e.setZero();
                        for (int d = 0; d <= params.negatives; ++d) {
                            int target;
                            float label;
                            if (d == 0) {
                                target = seq[j];
                                label = 1;
                            } else {
                                target = table[detail::uniform_index(rng, table_size)];
                                if (target == seq[j]) continue;
                                label = 0;
                            }
                            const float f = 1.0f / (1.0f + std::exp(-in_vec.row(center).dot(out_vec.row(target))));
                            epoch_loss -= std::log((label > 0 ? f : 1 - f) + 1e-7f);
                            const float g = (label - f) * alpha;
                            neu1e += g * out_vec.row(target).transpose();
                            out_vec.row(target) += g * in_vec.row(center);
                        }
                        in_vec.row(center) += neu1e.transpose();
                        ++epoch_pairs;
                    }
                }
            }
            out.loss_trace.push_back(epoch_pairs ? epoch_loss / static_cast<double>(epoch_pairs) : 0.0);
        }
        syn0 = in_vec.cast<double>();
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(i)] == 0) syn0.row(i).setZero();
    }
    if (!syn0.allFinite()) throw NumericError("skip-gram training produced non-finite embeddings");
    out.vectors = std::move(syn0);
    return out;
}

/**
 * Per-cell gene context: row `i` is the average of the gene vectors weighted
 * by cell `i`'s expression over genes with a nonzero vector. Cells that
 * express none of those genes get a zero row.
 */
struct GeneContextMatrix {
    Matrix g;
};

inline GeneContextMatrix project_to_cells(const ExpressionMatrix& x, const GeneEmbeddings& e) {
    detail::require_stage(x, Stage::hvg_selected, "project_to_cells");
    Matrix basis = Matrix::Zero(x.values.cols(), std::max(e.dim(), 0));
    std::vector<char> embedded(static_cast<std::size_t>(x.values.cols()), 0);
    for (Eigen::Index j = 0; j < x.values.cols(); ++j) {
        const auto row = e.find(x.gene_symbols[j]);
        if (row >= 0 && e.vectors.row(row).squaredNorm() > 0) {
            basis.row(j) = e.vectors.row(row);
            embedded[j] = 1;
        }
    }
    GeneContextMatrix out;
    out.g.noalias() = x.values * basis;
    for (Eigen::Index i = 0; i < x.values.rows(); ++i) {
        double total = 0;
        for (Eigen::Index j = 0; j < x.values.cols(); ++j) {
            if (embedded[j]) total += x.values(i, j);
        }
        if (total > 0) {
            out.g.row(i) /= total;
        } else {
            out.g.row(i).setZero();
        }
    }
    return out;
}

inline void write_embeddings(const std::filesystem::path& path, const GeneEmbeddings& e) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");
    out << "gene_symbol";
    for (int d = 1; d <= e.dim(); ++d) out << ",v" << d;
    out << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < e.genes.size(); ++i) {
        out << e.genes[i];
        for (Eigen::Index d = 0; d < e.vectors.cols(); ++d) out << ',' << e.vectors(static_cast<Eigen::Index>(i), d);
        out << '\n';
    }
}

inline GeneEmbeddings load_embeddings(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    std::string line;
    std::size_t lineno = 0;
    std::size_t width = 0;
    std::vector<double> buffer;
    GeneEmbeddings e;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank(line)) continue;
        auto f = detail::split(line, ',');
        if (width == 0) {
            if (f.size() < 2 || f[0] != "gene_symbol") throw ParseError("expected header 'gene_symbol,v1,...'", lineno);
            width = f.size();
            continue;
        }
        if (f.size() != width) throw ParseError("expected " + std::to_string(width) + " fields", lineno);
        e.genes.push_back(f[0]);
        for (std::size_t d = 1; d < f.size(); ++d) {
            double v;
            if (!detail::parse_double(f[d], v)) throw ParseError("non-numeric embedding value", lineno);
            buffer.push_back(v);
        }
    }
    if (width == 0) throw ParseError("empty embedding file");
    e.vectors = Eigen::Map<Matrix>(buffer.data(), static_cast<Eigen::Index>(e.genes.size()), static_cast<Eigen::Index>(width - 1));
    return e;
}

}

#endif
