#ifndef SCCDGA_PIPELINE_HPP
#define SCCDGA_PIPELINE_HPP

#include "cellgraph.hpp"
#include "genegraph.hpp"
#include "ingest.hpp"
#include "model.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <string>
#include <vector>

/**
 * @file pipeline.hpp
 *
 * @brief End-to-end wiring: preprocessing, both graphs, training, and the
 * result files.
 */

namespace sccdga {

struct PreprocessOptions {
    bool qc = true;
    /// Per-gene max-scaling between QC and the log transform.
    bool scale = false;
    std::size_t hvg = 2000;
};

struct PreprocessSummary {
    std::size_t cells_in = 0;
    std::size_t cells_kept = 0;
    std::size_t genes_in = 0;
    std::size_t genes_kept = 0;
    std::optional<QcBounds> bounds;
};

struct Preprocessed {
    ExpressionMatrix matrix;
    PreprocessSummary summary;
};

/**
 * QC (optional), optional scaling, `log2(v + 1)` and HVG selection. With
 * `qc` off the raw matrix is promoted to the filtered stage unchanged.
 */
inline Preprocessed preprocess(const ExpressionMatrix& raw, const PreprocessOptions& opt = {}) {
    Preprocessed out;
    out.summary.cells_in = raw.n_cells();
    out.summary.genes_in = raw.n_genes();
    ExpressionMatrix x;
    if (opt.qc) {
        std::vector<double> totals(raw.n_cells());
        for (std::size_t i = 0; i < totals.size(); ++i) totals[i] = raw.values.row(static_cast<Eigen::Index>(i)).sum();
        out.summary.bounds = qc_bounds(totals);
        x = qc_filter_cells(raw);
    } else {
        detail::require_stage(raw, Stage::raw, "preprocess");
        x = raw;
        x.stage = Stage::qc_filtered;
    }
    if (opt.scale) x = scale_genes_by_max(x);
    x = select_hvg(log_normalize(x), opt.hvg);
    out.summary.cells_kept = x.n_cells();
    out.summary.genes_kept = x.n_genes();
    out.matrix = std::move(x);
    return out;
}

/**
 * node2vec embedding of the PPI restricted to `genes`.
 */
inline GeneEmbeddings embed_genes(const PpiNetwork& ppi, const std::vector<std::string>& genes, const WalkParams& walk, const SkipGramParams& sg) {
    const GeneGraph graph(ppi.restrict_to(genes));
    if (graph.size() == 0) throw DomainError("none of the selected genes occur in the PPI network");
    const auto corpus = random_walks(graph, walk);
    if (corpus.sequences.empty()) throw DomainError("the PPI network restricted to the selected genes has no edges");
    return train_skipgram(corpus, sg);
}

/**
 * Everything the model consumes, built once per dataset.
 */
struct PreparedData {
    ExpressionMatrix matrix;
    ModelInputs inputs;
    GeneEmbeddings embeddings;
    std::optional<LabelVector> labels;
};

struct GraphOptions {
    int k = 15;
};

/**
 * Builds the cell graph and, when `ppi` is given, the gene context. Without a
 * network the gene context is left empty, which only the `no_genemap` model
 * accepts. A precomputed `embeddings` skips node2vec.
 */
inline PreparedData prepare(ExpressionMatrix hvg, const GraphOptions& graph_opt, const PpiNetwork* ppi, const WalkParams& walk,
                            const SkipGramParams& sg, const GeneEmbeddings* embeddings = nullptr) {
    PreparedData out;
    out.inputs.x = hvg.values;
    out.inputs.graph = knn_graph(pearson_similarity(hvg), graph_opt.k);
    if (embeddings) {
        out.embeddings = *embeddings;
    } else if (ppi) {
        out.embeddings = embed_genes(*ppi, hvg.gene_symbols, walk, sg);
    }
    if (out.embeddings.vectors.size()) {
        out.inputs.gene_context = project_to_cells(hvg, out.embeddings).g;
    }
    out.matrix = std::move(hvg);
    return out;
}

/// Pretraining followed by self-training, scored against labels when present.
inline ClusterResult run_model(const PreparedData& data, const ModelConfig& cfg, const EpochObserver& observer = {}) {
    auto state = pretrain(data.inputs, cfg);
    auto result = train(data.inputs, state, cfg, observer);
    if (data.labels) score(result, data.labels->labels);
    return result;
}

inline void write_assignments(const std::filesystem::path& path, const std::vector<std::string>& cell_ids, const std::vector<int>& labels) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");
    out << "cell_id,cluster\n";
    for (std::size_t i = 0; i < cell_ids.size(); ++i) out << cell_ids[i] << ',' << labels[i] << '\n';
}

/**
 * Reads `cell_id,cluster` rows, returning IDs and cluster numbers in file order.
 */
inline std::pair<std::vector<std::string>, std::vector<int>> read_assignments(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    std::pair<std::vector<std::string>, std::vector<int>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank(line)) continue;
        auto f = detail::split(line, ',');
        if (f.size() != 2) throw ParseError("expected 2 fields (cell_id,cluster)", lineno);
        if (lineno == 1 && f[0] == "cell_id") continue;
        long long c;
        if (!detail::parse_index(f[1], c)) throw ParseError("non-integer cluster '" + f[1] + "'", lineno);
        out.first.push_back(f[0]);
        out.second.push_back(static_cast<int>(c));
    }
    return out;
}

/// `cell_id,z1,...,zd` rows of the embedding.
inline void write_embedding(const std::filesystem::path& path, const std::vector<std::string>& cell_ids, const Matrix& z) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");
    out << "cell_id";
    for (Eigen::Index d = 1; d <= z.cols(); ++d) out << ",z" << d;
    out << '\n' << std::setprecision(17);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        out << cell_ids[i];
        for (Eigen::Index d = 0; d < z.cols(); ++d) out << ',' << z(i, d);
        out << '\n';
    }
}

/// Reads an embedding written by `write_embedding()`.
inline std::pair<std::vector<std::string>, Matrix> read_embedding(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank(line)) continue;
        auto f = detail::split(line, ',');
        if (lineno == 1) {
            if (f.size() < 2 || f[0] != "cell_id") throw ParseError("expected a cell_id,z1,... header", lineno);
            width = f.size();
            continue;
        }
        if (f.size() != width) throw ParseError("expected " + std::to_string(width) + " fields, found " + std::to_string(f.size()), lineno);
        std::vector<double> row(width - 1);
        for (std::size_t d = 1; d < width; ++d) {
            if (!detail::parse_double(f[d], row[d - 1])) throw ParseError("non-numeric value '" + f[d] + "'", lineno);
        }
        ids.push_back(f[0]);
        rows.push_back(std::move(row));
    }
    Matrix z(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width ? width - 1 : 0));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t d = 0; d < rows[i].size(); ++d) z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = rows[i][d];
    }
    return {std::move(ids), std::move(z)};
}

/**
 * `epoch,L_cell,L_gene,L_ssl,L_ul,total,silhouette`, one row per recorded
 * epoch. The silhouette field is empty on epochs without an evaluation.
 */
inline void write_losses(const std::filesystem::path& path, const std::vector<LossRecord>& trace) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");
    out << "epoch,L_cell,L_gene,L_ssl,L_ul,total,silhouette\n" << std::setprecision(10);
    for (const auto& l : trace) {
        out << l.epoch << ',' << l.l_cell << ',' << l.l_gene << ',' << l.l_ssl << ',' << l.l_ul << ',' << l.total << ',';
        if (!std::isnan(l.silhouette)) out << l.silhouette;
        out << '\n';
    }
}

}

#endif
