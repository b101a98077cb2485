#ifndef SCCDGA_SYNTHBENCH_HPP
#define SCCDGA_SYNTHBENCH_HPP

#include "error.hpp"
#include "ingest.hpp"
#include "matrix.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

/**
 * @file synthbench.hpp
 *
 * @brief Seeded synthetic expression data with known clusters and a
 * block-structured interaction network.
 *
 * Genes are split into contiguous PPI blocks. Cluster `j` is characterized by
 * the genes of block `j`, plus a fraction `rho` of block `j + 1` (mod the
 * number of clusters). A cell draws each signature gene around `high_mean`
 * and every other gene around `low_mean`, with Gaussian noise of standard
 * deviation `sigma`, clipped at zero. Network edges are sampled independently
 * with a within-block or between-block probability.
 */

namespace sccdga {

struct SynthSpec {
    int n_cells = 400;
    int n_genes = 300;
    int n_clusters = 4;
    double sigma = 4.0;
    double rho = 0.0;
    int n_blocks = 6;
    double intra_block_p = 0.3;
    double inter_block_p = 0.01;
    double high_mean = 8.0;
    double low_mean = 2.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_cells < 1 || n_genes < 1) throw DomainError("synthetic data needs at least one cell and one gene");
        if (n_clusters < 1 || n_clusters > n_cells) throw DomainError("n_clusters must lie in [1, n_cells]");
        if (n_blocks < 1 || n_blocks > n_genes) throw DomainError("n_blocks must lie in [1, n_genes]");
        if (n_clusters > n_blocks) {
            throw DomainError("infeasible spec: " + std::to_string(n_clusters) + " cluster signatures need as many PPI blocks, only " + std::to_string(n_blocks) + " available");
        }
        if (!(rho >= 0 && rho < 1)) throw DomainError("rho must lie in [0, 1)");
        if (!(sigma >= 0)) throw DomainError("sigma must be non-negative");
        auto prob = [](double p) { return p >= 0 && p <= 1; };
        if (!prob(intra_block_p) || !prob(inter_block_p)) throw DomainError("edge probabilities must lie in [0, 1]");
        if (!(high_mean >= 0) || !(low_mean >= 0)) throw DomainError("means must be non-negative");
    }
};

struct SynthData {
    ExpressionMatrix expression;
    LabelVector labels;
    PpiNetwork ppi;
    /// PPI block of each gene.
    std::vector<int> gene_block;
    /// Signature gene indices of each cluster.
    std::vector<std::vector<int>> signatures;
};

namespace detail {

inline std::string padded(const char* prefix, int i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, i);
    return buf;
}

inline int digits(int n) {
    return static_cast<int>(std::to_string(std::max(n, 1)).size());
}

}

inline SynthData generate(const SynthSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    SynthData out;

    auto& x = out.expression;
    for (int g = 0; g < spec.n_genes; ++g) x.gene_symbols.push_back(detail::padded("G", g + 1, detail::digits(spec.n_genes)));
    for (int i = 0; i < spec.n_cells; ++i) x.cell_ids.push_back(detail::padded("cell", i + 1, detail::digits(spec.n_cells)));

    out.gene_block.resize(static_cast<std::size_t>(spec.n_genes));
    std::vector<std::vector<int>> blocks(static_cast<std::size_t>(spec.n_blocks));
    for (int g = 0; g < spec.n_genes; ++g) {
        const int b = static_cast<int>(static_cast<long long>(g) * spec.n_blocks / spec.n_genes);
        out.gene_block[g] = b;
        blocks[b].push_back(g);
    }

    out.signatures.resize(static_cast<std::size_t>(spec.n_clusters));
    for (int c = 0; c < spec.n_clusters; ++c) {
        std::set<int> sig(blocks[c].begin(), blocks[c].end());
        if (spec.n_clusters > 1) {
            const auto& next = blocks[(c + 1) % spec.n_clusters];
            const auto borrow = static_cast<std::size_t>(std::lround(spec.rho * static_cast<double>(next.size())));
            sig.insert(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(std::min(borrow, next.size())));
        }
        out.signatures[c].assign(sig.begin(), sig.end());
    }

    for (int c = 0; c < spec.n_clusters; ++c) out.labels.names.push_back("type" + std::to_string(c + 1));
    out.labels.labels.resize(static_cast<std::size_t>(spec.n_cells));
    for (int i = 0; i < spec.n_cells; ++i) out.labels.labels[i] = i % spec.n_clusters;

    std::normal_distribution<double> noise(0.0, 1.0);
    x.values.resize(spec.n_cells, spec.n_genes);
    for (int i = 0; i < spec.n_cells; ++i) {
        const auto& sig = out.signatures[out.labels.labels[i]];
        std::vector<char> high(static_cast<std::size_t>(spec.n_genes), 0);
        for (int g : sig) high[g] = 1;
        for (int g = 0; g < spec.n_genes; ++g) {
            const double mean = high[g] ? spec.high_mean : spec.low_mean;
            x.values(i, g) = std::max(0.0, mean + spec.sigma * noise(rng));
        }
    }
    x.stage = Stage::raw;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> score(400, 999);
    out.ppi.nodes = x.gene_symbols;
    out.ppi.score_threshold = 0;
    for (int a = 0; a < spec.n_genes; ++a) {
        for (int b = a + 1; b < spec.n_genes; ++b) {
            const double p = out.gene_block[a] == out.gene_block[b] ? spec.intra_block_p : spec.inter_block_p;
            if (unit(rng) < p) out.ppi.edges.push_back({x.gene_symbols[a], x.gene_symbols[b], static_cast<double>(score(rng))});
        }
    }
    return out;
}

/**
 * Writes `expression.csv`, `labels.csv` and `ppi.tsv` into `dir`.
 */
inline void write_synth(const std::filesystem::path& dir, const SynthData& data) {
    std::filesystem::create_directories(dir);
    write_expression_csv(dir / "expression.csv", data.expression);
    write_labels(dir / "labels.csv", data.expression.cell_ids, data.labels);
    write_ppi(dir / "ppi.tsv", data.ppi);
}

}

#endif
