#ifndef SCCDGA_MODEL_HPP
#define SCCDGA_MODEL_HPP

#include "cellgraph.hpp"
#include "error.hpp"
#include "kmeans.hpp"
#include "matrix.hpp"
#include "metrics.hpp"
#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

/**
 * @file model.hpp
 *
 * @brief The fused dual autoencoder and its two training phases.
 *
 * The cell branch encodes the expression matrix with stacked graph attention
 * layers over the cell KNN graph. The gene branch encodes the per-cell gene
 * context (expression-weighted PPI embeddings) with dense layers. The two
 * bottlenecks are concatenated into the shared embedding `Z_F`, from which
 * two dense decoders reconstruct the expression matrix (cosine loss) and the
 * gene context (mean absolute error).
 *
 * Pretraining minimizes the weighted reconstruction loss only. Training then
 * adds a KL self-training term between the Student-t soft assignment `Q` of
 * `Z_F` to learnable centers and a periodically refreshed sharpened target
 * `P`, with early stopping on the silhouette of the hard assignments.
 */

namespace sccdga {

enum class Ablation { full, no_gat, no_genemap };

inline const char* ablation_name(Ablation a) {
    switch (a) {
        case Ablation::full: return "full";
        case Ablation::no_gat: return "no_gat";
        case Ablation::no_genemap: return "no_genemap";
    }
    return "unknown";
}

inline Ablation parse_ablation(const std::string& s) {
    if (s == "full") return Ablation::full;
    if (s == "no_gat") return Ablation::no_gat;
    if (s == "no_genemap") return Ablation::no_genemap;
    throw DomainError("unknown ablation mode '" + s + "'");
}

struct ModelConfig {
    /// Encoder widths; the last entry is the per-branch bottleneck.
    std::vector<int> encoder_dims{512, 256, 64};
    double lambda = 0.5;
    int pretrain_epochs = 200;
    int train_epochs = 5000;
    double lr_pretrain = 0.0002;
    double lr_train = 0.0005;
    int target_refresh_interval = 100;
    int silhouette_eval_interval = 100;
    int patience = 5;
    int n_clusters = 2;
    std::uint64_t seed = 0;
    Ablation ablation = Ablation::full;
    /// Precision of matrix products during training.
    ProductPrecision precision = ProductPrecision::single;

    int bottleneck() const { return encoder_dims.back(); }

    /// `lambda` after the ablation override (the gene branch is dropped in `no_genemap`).
    double effective_lambda() const { return ablation == Ablation::no_genemap ? 1.0 : lambda; }

    bool uses_gene_branch() const { return ablation != Ablation::no_genemap; }

    void validate() const {
        if (encoder_dims.empty()) throw DomainError("encoder_dims must not be empty");
        for (int d : encoder_dims) {
            if (d <= 0) throw DomainError("encoder dimensions must be positive");
        }
        if (!(lambda >= 0 && lambda <= 1)) throw DomainError("lambda must lie in [0, 1]");
        if (n_clusters < 2) throw DomainError("n_clusters must be at least 2, got " + std::to_string(n_clusters));
        if (pretrain_epochs < 0 || train_epochs < 0) throw DomainError("epoch counts must be non-negative");
        if (!(lr_pretrain > 0) || !(lr_train > 0)) throw DomainError("learning rates must be positive");
        if (target_refresh_interval < 1 || silhouette_eval_interval < 1) throw DomainError("intervals must be at least 1");
        if (patience < 1) throw DomainError("patience must be at least 1");
    }
};

/**
 * Fixed inputs of a run: preprocessed expression, cell graph and gene context.
 */
struct ModelInputs {
    Matrix x;
    CellGraph graph;
    /// Per-cell gene context; ignored by the `no_genemap` ablation.
    Matrix gene_context;

    void validate(const ModelConfig& cfg) const {
        if (x.rows() == 0 || x.cols() == 0) throw DomainError("empty expression matrix");
        if (graph.n_nodes() != static_cast<std::size_t>(x.rows())) {
            throw DomainError("cell graph has " + std::to_string(graph.n_nodes()) + " nodes but there are " + std::to_string(x.rows()) + " cells");
        }
        if (cfg.uses_gene_branch() && (gene_context.rows() != x.rows() || gene_context.cols() == 0)) {
            throw DomainError("gene context must have one non-empty row per cell");
        }
        if (cfg.n_clusters > x.rows()) {
            throw DomainError("more clusters (" + std::to_string(cfg.n_clusters) + ") than cells (" + std::to_string(x.rows()) + ")");
        }
    }
};

namespace detail {

inline std::string layer_name(const char* branch, std::size_t layer, const char* field) {
    return std::string(branch) + std::to_string(layer) + "." + field;
}

inline std::vector<int> decoder_dims(const ModelConfig& cfg, int output) {
    std::vector<int> dims(cfg.encoder_dims.rbegin() + 1, cfg.encoder_dims.rend());
    dims.push_back(output);
    return dims;
}

inline void add_dense_stack(ParamSet& p, const char* branch, int input, const std::vector<int>& dims, std::mt19937_64& rng) {
    int in = input;
    for (std::size_t l = 0; l < dims.size(); ++l) {
        p[layer_name(branch, l, "w")] = glorot_uniform(in, dims[l], rng);
        p[layer_name(branch, l, "b")] = Matrix::Zero(1, dims[l]);
        in = dims[l];
    }
}

}

/**
 * Fresh parameters for `n_genes` expression columns and a gene context of
 * width `context_dim`. Cluster centers are added later by `train()`.
 */
inline ParamSet init_params(const ModelConfig& cfg, int n_genes, int context_dim) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    ParamSet p;
    const int fused = cfg.uses_gene_branch() ? 2 * cfg.bottleneck() : cfg.bottleneck();

    if (cfg.ablation == Ablation::no_gat) {
        detail::add_dense_stack(p, "cell_enc", n_genes, cfg.encoder_dims, rng);
    } else {
        int in = n_genes;
        for (std::size_t l = 0; l < cfg.encoder_dims.size(); ++l) {
            const int out = cfg.encoder_dims[l];
            p[detail::layer_name("cell_enc", l, "w")] = glorot_uniform(in, out, rng);
            p[detail::layer_name("cell_enc", l, "attn")] = glorot_uniform(1, 2 * out, rng);
            in = out;
        }
    }
    detail::add_dense_stack(p, "cell_dec", fused, detail::decoder_dims(cfg, n_genes), rng);
    if (cfg.uses_gene_branch()) {
        detail::add_dense_stack(p, "gene_enc", context_dim, cfg.encoder_dims, rng);
        detail::add_dense_stack(p, "gene_dec", fused, detail::decoder_dims(cfg, context_dim), rng);
    }
    return p;
}

/**
 * Cell branch encoder: graph attention layers (dense layers under `no_gat`),
 * all with relu.
 */
inline Var encode_cells(Tape& tape, const Bindings& b, const ModelInputs& in, const ModelConfig& cfg) {
    Var h = tape.constant(in.x);
    for (std::size_t l = 0; l < cfg.encoder_dims.size(); ++l) {
        if (cfg.ablation == Ablation::no_gat) {
            h = dense_forward(h, b.at(detail::layer_name("cell_enc", l, "w")), b.at(detail::layer_name("cell_enc", l, "b")), Activation::relu);
        } else {
            h = graph_attention_layer(h, in.graph, b.at(detail::layer_name("cell_enc", l, "w")), b.at(detail::layer_name("cell_enc", l, "attn")));
        }
    }
    return h;
}

/// Gene branch encoder: dense relu layers over the gene context.
inline Var encode_genes(Tape& tape, const Bindings& b, const ModelInputs& in, const ModelConfig& cfg) {
    Var h = tape.constant(in.gene_context);
    for (std::size_t l = 0; l < cfg.encoder_dims.size(); ++l) {
        h = dense_forward(h, b.at(detail::layer_name("gene_enc", l, "w")), b.at(detail::layer_name("gene_enc", l, "b")), Activation::relu);
    }
    return h;
}

/// `relu([z_cell | z_gene])`.
inline Var fuse(Var z_cell, Var z_gene) {
    return relu(concat_cols(z_cell, z_gene));
}

namespace detail {

inline Var decode(const Bindings& b, const char* branch, Var z, std::size_t layers) {
    Var h = z;
    for (std::size_t l = 0; l < layers; ++l) {
        const auto act = l + 1 == layers ? Activation::identity : Activation::relu;
        h = dense_forward(h, b.at(layer_name(branch, l, "w")), b.at(layer_name(branch, l, "b")), act);
    }
    return h;
}

}

/// Dense decoder from `Z_F` back to the expression matrix; identity output.
inline Var decode_cells(const Bindings& b, Var z_f, const ModelConfig& cfg) {
    return detail::decode(b, "cell_dec", z_f, cfg.encoder_dims.size());
}

/// Dense decoder from `Z_F` back to the gene context; identity output.
inline Var decode_genes(const Bindings& b, Var z_f, const ModelConfig& cfg) {
    return detail::decode(b, "gene_dec", z_f, cfg.encoder_dims.size());
}

/**
 * Every node of one forward pass. Gene-branch handles are empty under
 * `no_genemap`; `q`, `l_ul` are empty without a target distribution.
 */
struct ForwardPass {
    Var z_cell, z_gene, z_f;
    Var x_rec, g_rec;
    Var l_cell, l_gene, l_ssl;
    Var q, l_ul;
    Var total;
};

/**
 * Records the model and its loss. With `target`, adds `KL(target || Q)`
 * against the bound `centers` to the reconstruction loss.
 */
inline ForwardPass record_forward(Tape& tape, const Bindings& b, const ModelInputs& in, const ModelConfig& cfg, const Matrix* target = nullptr) {
    ForwardPass f;
    const double lambda = cfg.effective_lambda();
    f.z_cell = encode_cells(tape, b, in, cfg);
    if (cfg.uses_gene_branch()) {
        f.z_gene = encode_genes(tape, b, in, cfg);
        f.z_f = fuse(f.z_cell, f.z_gene);
    } else {
        f.z_f = relu(f.z_cell);
    }
    f.x_rec = decode_cells(b, f.z_f, cfg);
    f.l_cell = cosine_loss(in.x, f.x_rec);
    if (cfg.uses_gene_branch()) {
        f.g_rec = decode_genes(b, f.z_f, cfg);
        f.l_gene = mae_loss(in.gene_context, f.g_rec);
        f.l_ssl = add(scale(f.l_cell, 2 * lambda), scale(f.l_gene, 2 * (1 - lambda)));
    } else {
        f.l_ssl = scale(f.l_cell, 2 * lambda);
    }
    f.total = f.l_ssl;
    if (target) {
        f.q = student_t_assign(f.z_f, b.at("centers"));
        f.l_ul = kl_to_target(*target, f.q);
        f.total = add(f.l_ssl, f.l_ul);
    }
    return f;
}

/// `1 - mean_i cos(x_i, x'_i)`; rows with a zero side count as similarity 0.
inline double loss_cell(const Matrix& x, const Matrix& x_rec) {
    Tape t;
    return cosine_loss(x, t.constant(x_rec)).value()(0, 0);
}

/// Mean absolute error over all entries.
inline double loss_gene(const Matrix& g, const Matrix& g_rec) {
    Tape t;
    return mae_loss(g, t.constant(g_rec)).value()(0, 0);
}

inline double loss_ssl(double l_cell, double l_gene, double lambda) {
    return 2 * lambda * l_cell + 2 * (1 - lambda) * l_gene;
}

/**
 * Student-t soft assignment of embedding rows to centers; rows sum to 1.
 */
inline Matrix soft_assign(const Matrix& z, const Matrix& centers) {
    Matrix q(z.rows(), centers.rows());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index j = 0; j < centers.rows(); ++j) q(i, j) = 1.0 / (1.0 + (z.row(i) - centers.row(j)).squaredNorm());
        q.row(i) /= q.row(i).sum();
    }
    return q;
}

/**
 * Sharpened target `p_ij ~ q_ij^2 / f_j` with cluster frequencies
 * `f_j = sum_i q_ij`, renormalized per row.
 */
inline Matrix target_distribution(const Matrix& q) {
    const RowVector freq = q.colwise().sum();
    Matrix p(q.rows(), q.cols());
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        for (Eigen::Index j = 0; j < q.cols(); ++j) p(i, j) = freq(j) > 0 ? q(i, j) * q(i, j) / freq(j) : 0.0;
        const double s = p.row(i).sum();
        if (s > 0) p.row(i) /= s;
    }
    return p;
}

/// `sum_ij p_ij log(p_ij / q_ij)` with `0 log 0 = 0`.
inline double kl_loss(const Matrix& p, const Matrix& q) {
    Tape t;
    return kl_to_target(p, t.constant(q)).value()(0, 0);
}

/// Row-wise argmax, lowest index on ties.
inline std::vector<int> hard_labels(const Matrix& q) {
    std::vector<int> out(static_cast<std::size_t>(q.rows()));
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        Eigen::Index arg = 0;
        for (Eigen::Index j = 1; j < q.cols(); ++j) {
            if (q(i, j) > q(i, arg)) arg = j;
        }
        out[i] = static_cast<int>(arg);
    }
    return out;
}

/**
 * Initial cluster centers: k-means on the embedding rows.
 */
inline Matrix init_centers(const Matrix& z_f, int c, std::uint64_t seed) {
    if (c > z_f.rows()) {
        throw DomainError("cannot place " + std::to_string(c) + " centers among " + std::to_string(z_f.rows()) + " cells");
    }
    KmeansOptions opt;
    opt.seed = seed;
    return kmeans(z_f, c, opt).centers;
}

/**
 * Patience counter over periodic silhouette evaluations. Only strict
 * improvements reset the counter.
 */
class EarlyStopping {
public:
    explicit EarlyStopping(int patience) : patience_(patience) {}

    /// Records an evaluation; returns true if it is the new best.
    bool update(double score) {
        ++evaluations_;
        if (score > best_) {
            best_ = score;
            best_evaluation_ = evaluations_;
            since_best_ = 0;
            return true;
        }
        ++since_best_;
        return false;
    }

    bool should_stop() const { return since_best_ >= patience_; }
    double best() const { return best_; }
    /// 1-based index of the best evaluation, 0 before any.
    int best_evaluation() const { return best_evaluation_; }
    int evaluations() const { return evaluations_; }

private:
    int patience_;
    double best_ = -std::numeric_limits<double>::infinity();
    int best_evaluation_ = 0;
    int evaluations_ = 0;
    int since_best_ = 0;
};

struct LossRecord {
    int epoch = 0;
    double l_cell = 0;
    double l_gene = 0;
    double l_ssl = 0;
    double l_ul = 0;
    double total = 0;
    /// NaN on epochs without a silhouette evaluation.
    double silhouette = std::numeric_limits<double>::quiet_NaN();
};

struct ModelState {
    ParamSet params;
    std::vector<LossRecord> trace;
};

/**
 * Values exposed to an observer after each training epoch's forward pass.
 */
struct EpochView {
    int epoch;
    const Matrix& q;
    const Matrix& p;
    const LossRecord& losses;
};

using EpochObserver = std::function<void(const EpochView&)>;

struct ClusterResult {
    std::vector<int> labels;
    Matrix q;
    Matrix p;
    Matrix embedding;
    std::vector<LossRecord> pretrain_trace;
    std::vector<LossRecord> trace;
    double silhouette = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> ari;
    std::optional<double> nmi;
    Ablation ablation = Ablation::full;
    /// Epoch of the returned snapshot.
    int best_epoch = 0;
    /// Epochs actually trained before stopping.
    int epochs_run = 0;
    bool stopped_early = false;
    ModelState state;
};

namespace detail {

inline LossRecord record_losses(int epoch, const ForwardPass& f) {
    LossRecord r;
    r.epoch = epoch;
    r.l_cell = f.l_cell.value()(0, 0);
    r.l_gene = f.l_gene.tape ? f.l_gene.value()(0, 0) : 0.0;
    r.l_ssl = f.l_ssl.value()(0, 0);
    r.l_ul = f.l_ul.tape ? f.l_ul.value()(0, 0) : 0.0;
    r.total = f.total.value()(0, 0);
    if (!std::isfinite(r.total)) throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
    return r;
}

template <typename Fn>
auto at_epoch(int epoch, Fn&& fn) {
    try {
        return fn();
    } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ")");
    }
}

}

/// Embedding `Z_F` for the given parameters.
inline Matrix embed(const ParamSet& params, const ModelInputs& in, const ModelConfig& cfg) {
    Tape tape(cfg.precision);
    auto b = tape.bind(params);
    return record_forward(tape, b, in, cfg).z_f.value();
}

/**
 * Reconstruction-only phase: `pretrain_epochs` full-batch Adam steps at
 * `lr_pretrain` on the weighted cell/gene loss, from fresh parameters.
 */
inline ModelState pretrain(const ModelInputs& in, const ModelConfig& cfg) {
    cfg.validate();
    in.validate(cfg);
    ModelState state;
    state.params = init_params(cfg, static_cast<int>(in.x.cols()), cfg.uses_gene_branch() ? static_cast<int>(in.gene_context.cols()) : 0);
    Adam opt(cfg.lr_pretrain);
    for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
        detail::at_epoch(epoch, [&] {
            Tape tape(cfg.precision);
            auto b = tape.bind(state.params);
            auto f = record_forward(tape, b, in, cfg);
            state.trace.push_back(detail::record_losses(epoch, f));
            opt.step(state.params, tape.gradients(f.total, b));
            return 0;
        });
    }
    return state;
}

/**
 * Self-training phase. Centers start from k-means on the pretrained `Z_F`.
 * Each epoch minimizes reconstruction + `KL(P || Q)`; `P` is recomputed from
 * the current `Q` every `target_refresh_interval` epochs. Every
 * `silhouette_eval_interval` epochs (and after the last one) the silhouette of
 * `Z_F` under the hard labels is evaluated; the run stops after `patience`
 * evaluations without improvement and returns the best-scoring snapshot. A
 * snapshot whose hard labels use fewer than two clusters scores -1.
 */
inline ClusterResult train(const ModelInputs& in, const ModelState& pretrained, const ModelConfig& cfg, const EpochObserver& observer = {}) {
    cfg.validate();
    in.validate(cfg);

    ParamSet params = pretrained.params;
    params["centers"] = init_centers(embed(params, in, cfg), cfg.n_clusters, cfg.seed);

    ClusterResult best;
    best.ablation = cfg.ablation;
    best.pretrain_trace = pretrained.trace;
    std::vector<LossRecord> trace;
    EarlyStopping stopper(cfg.patience);
    Adam opt(cfg.lr_train);
    Matrix target;
    int epochs_run = 0;
    bool stopped = false;

    for (int epoch = 0; epoch <= cfg.train_epochs; ++epoch) {
        const bool last = epoch == cfg.train_epochs;
        const bool done = detail::at_epoch(epoch, [&] {
            Tape tape(cfg.precision);
            auto b = tape.bind(params);
            auto f = record_forward(tape, b, in, cfg);
            Var q = student_t_assign(f.z_f, b.at("centers"));
            if (epoch % cfg.target_refresh_interval == 0) target = target_distribution(q.value());
            f.q = q;
            f.l_ul = kl_to_target(target, q);
            f.total = add(f.l_ssl, f.l_ul);
            LossRecord rec = detail::record_losses(epoch, f);

            if (epoch % cfg.silhouette_eval_interval == 0 || last) {
                const auto labels = hard_labels(q.value());
                const bool multi = std::any_of(labels.begin(), labels.end(), [&](int l) { return l != labels.front(); });
                rec.silhouette = multi ? silhouette(f.z_f.value(), labels) : -1.0;
                if (stopper.update(rec.silhouette)) {
                    best.labels = labels;
                    best.q = q.value();
                    best.p = target;
                    best.embedding = f.z_f.value();
                    best.silhouette = rec.silhouette;
                    best.best_epoch = epoch;
                    best.state.params = params;
                }
            }
            if (observer) observer(EpochView{epoch, q.value(), target, rec});
            trace.push_back(rec);
            if (last || stopper.should_stop()) return true;
            opt.step(params, tape.gradients(f.total, b));
            ++epochs_run;
            return false;
        });
        if (done) {
            stopped = !last;
            break;
        }
    }

    best.trace = std::move(trace);
    best.state.trace = pretrained.trace;
    best.epochs_run = epochs_run;
    best.stopped_early = stopped;
    return best;
}

/// Attaches ARI/NMI against ground truth.
inline void score(ClusterResult& r, const std::vector<int>& truth) {
    r.ari = ari(truth, r.labels);
    r.nmi = nmi(truth, r.labels);
}

}

#endif
