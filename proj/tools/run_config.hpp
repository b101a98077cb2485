#ifndef SCCDGA_TOOLS_RUN_CONFIG_HPP
#define SCCDGA_TOOLS_RUN_CONFIG_HPP

#include <sccdga/sccdga.hpp>

#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

// Every setting a command can take, addressable by key from a config file or
// as `--key-with-dashes` on the command line.

namespace sccdga::cli {

struct RunConfig {
    std::string expression;
    std::string format = "csv";
    bool preprocessed = false;
    std::string labels;
    std::string ppi;
    int ppi_threshold = 400;
    std::string gene_embeddings;
    std::string assignments;
    std::string embedding;

    bool qc = true;
    bool scale = false;
    int hvg = 2000;
    int k = 15;

    WalkParams walk;
    SkipGramParams skipgram;
    ModelConfig model;
    SynthSpec synth;

    std::uint64_t seed = 0;
    std::vector<std::uint64_t> seeds;
    int threads = 1;

    /// Copies the shared seed into every seeded component.
    void apply_seed() {
        walk.seed = seed;
        skipgram.seed = seed;
        model.seed = seed;
        synth.seed = seed;
    }
};

enum class Group { input, preprocess, graph, genes, model, synth, evaluate, harness };

struct Key {
    std::string name;
    Group group;
    std::string help;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

namespace detail {

inline std::string bad_value(const std::string& key, const std::string& v, const char* what) {
    return "invalid value '" + v + "' for " + key + ": expected " + what;
}

inline int to_int(const std::string& key, const std::string& v) {
    long long out;
    if (!sccdga::detail::parse_index(sccdga::detail::trim(v), out) || out > 1000000000) throw DomainError(bad_value(key, v, "a non-negative integer"));
    return static_cast<int>(out);
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
    long long out;
    if (!sccdga::detail::parse_index(sccdga::detail::trim(v), out)) throw DomainError(bad_value(key, v, "a non-negative integer"));
    return static_cast<std::uint64_t>(out);
}

inline double to_double(const std::string& key, const std::string& v) {
    double out;
    if (!sccdga::detail::parse_double(sccdga::detail::trim(v), out)) throw DomainError(bad_value(key, v, "a number"));
    return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    const auto t = sccdga::detail::trim(v);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw DomainError(bad_value(key, v, "true or false"));
}

inline std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

template <class T>
std::string join(const std::vector<T>& xs) {
    std::ostringstream s;
    for (std::size_t i = 0; i < xs.size(); ++i) s << (i ? "," : "") << xs[i];
    return s.str();
}

inline std::string bool_str(bool b) { return b ? "true" : "false"; }

}

#define SCCDGA_INT_KEY(NAME, GROUP, FIELD, HELP) \
    Key{NAME, GROUP, HELP, [](RunConfig& c, const std::string& v) { c.FIELD = detail::to_int(NAME, v); }, [](const RunConfig& c) { return std::to_string(c.FIELD); }}
#define SCCDGA_REAL_KEY(NAME, GROUP, FIELD, HELP) \
    Key{NAME, GROUP, HELP, [](RunConfig& c, const std::string& v) { c.FIELD = detail::to_double(NAME, v); }, [](const RunConfig& c) { return detail::fmt(c.FIELD); }}
#define SCCDGA_BOOL_KEY(NAME, GROUP, FIELD, HELP) \
    Key{NAME, GROUP, HELP, [](RunConfig& c, const std::string& v) { c.FIELD = detail::to_bool(NAME, v); }, [](const RunConfig& c) { return detail::bool_str(c.FIELD); }}
#define SCCDGA_STR_KEY(NAME, GROUP, FIELD, HELP) \
    Key{NAME, GROUP, HELP, [](RunConfig& c, const std::string& v) { c.FIELD = sccdga::detail::trim(v); }, [](const RunConfig& c) { return c.FIELD; }}

/// All keys, in the order they are echoed.
inline const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        SCCDGA_STR_KEY("expression", Group::input, expression, "expression matrix (cells x genes)"),
        {"format", Group::input, "expression format: csv or mtx",
         [](RunConfig& c, const std::string& v) {
             const auto t = sccdga::detail::trim(v);
             if (t != "csv" && t != "mtx") throw DomainError(detail::bad_value("format", v, "csv or mtx"));
             c.format = t;
         },
         [](const RunConfig& c) { return c.format; }},
        SCCDGA_BOOL_KEY("preprocessed", Group::input, preprocessed, "input is already log-normalized and HVG-selected"),
        SCCDGA_STR_KEY("labels", Group::input, labels, "ground-truth labels (cell_id,label)"),
        SCCDGA_BOOL_KEY("qc", Group::preprocess, qc, "apply the quartile QC cell filter"),
        SCCDGA_BOOL_KEY("scale", Group::preprocess, scale, "scale each gene by its maximum before the log transform"),
        SCCDGA_INT_KEY("hvg", Group::preprocess, hvg, "number of highly variable genes kept"),
        SCCDGA_INT_KEY("k", Group::graph, k, "neighbors per cell in the KNN graph"),
        SCCDGA_STR_KEY("ppi", Group::genes, ppi, "interaction network (TSV with gene1, gene2, combined_score)"),
        SCCDGA_INT_KEY("ppi_threshold", Group::genes, ppi_threshold, "minimum combined score kept"),
        SCCDGA_STR_KEY("gene_embeddings", Group::genes, gene_embeddings, "precomputed gene embeddings, skips node2vec"),
        SCCDGA_REAL_KEY("p", Group::genes, walk.p, "node2vec return parameter"),
        SCCDGA_REAL_KEY("q", Group::genes, walk.q, "node2vec in-out parameter"),
        SCCDGA_INT_KEY("walks_per_node", Group::genes, walk.walks_per_node, "walks started at each gene"),
        SCCDGA_INT_KEY("walk_length", Group::genes, walk.walk_length, "nodes per walk"),
        SCCDGA_INT_KEY("dim", Group::genes, skipgram.dim, "gene embedding dimension"),
        SCCDGA_INT_KEY("window", Group::genes, skipgram.window, "skip-gram window"),
        SCCDGA_INT_KEY("negatives", Group::genes, skipgram.negatives, "negative samples per pair"),
        SCCDGA_INT_KEY("sg_epochs", Group::genes, skipgram.epochs, "skip-gram epochs"),
        SCCDGA_REAL_KEY("sg_lr", Group::genes, skipgram.lr, "skip-gram learning rate"),
        SCCDGA_BOOL_KEY("exact_softmax", Group::genes, skipgram.exact_softmax, "full-softmax gradient descent instead of negative sampling"),
        {"encoder_dims", Group::model, "encoder widths, comma separated",
         [](RunConfig& c, const std::string& v) {
             std::vector<int> dims;
             for (const auto& f : sccdga::detail::split(v, ',')) dims.push_back(detail::to_int("encoder_dims", f));
             c.model.encoder_dims = dims;
         },
         [](const RunConfig& c) { return detail::join(c.model.encoder_dims); }},
        SCCDGA_REAL_KEY("lambda", Group::model, model.lambda, "weight of the cell reconstruction loss"),
        SCCDGA_INT_KEY("pretrain_epochs", Group::model, model.pretrain_epochs, "reconstruction-only epochs"),
        SCCDGA_INT_KEY("train_epochs", Group::model, model.train_epochs, "self-training epochs"),
        SCCDGA_REAL_KEY("lr_pretrain", Group::model, model.lr_pretrain, "pretraining learning rate"),
        SCCDGA_REAL_KEY("lr_train", Group::model, model.lr_train, "self-training learning rate"),
        SCCDGA_INT_KEY("target_refresh_interval", Group::model, model.target_refresh_interval, "epochs between target refreshes"),
        SCCDGA_INT_KEY("silhouette_eval_interval", Group::model, model.silhouette_eval_interval, "epochs between silhouette evaluations"),
        SCCDGA_INT_KEY("patience", Group::model, model.patience, "evaluations without improvement before stopping"),
        SCCDGA_INT_KEY("clusters", Group::model, model.n_clusters, "number of clusters"),
        {"ablation", Group::model, "full, no_gat or no_genemap",
         [](RunConfig& c, const std::string& v) { c.model.ablation = parse_ablation(sccdga::detail::trim(v)); },
         [](const RunConfig& c) { return std::string(ablation_name(c.model.ablation)); }},
        {"precision", Group::model, "precision of matrix products in training: single or double",
         [](RunConfig& c, const std::string& v) {
             const auto t = sccdga::detail::trim(v);
             if (t == "single") c.model.precision = ProductPrecision::single;
             else if (t == "double") c.model.precision = ProductPrecision::double_precision;
             else throw DomainError(detail::bad_value("precision", v, "single or double"));
         },
         [](const RunConfig& c) { return std::string(c.model.precision == ProductPrecision::single ? "single" : "double"); }},
        SCCDGA_INT_KEY("cells", Group::synth, synth.n_cells, "synthetic cells"),
        SCCDGA_INT_KEY("genes", Group::synth, synth.n_genes, "synthetic genes"),
        SCCDGA_INT_KEY("synth_clusters", Group::synth, synth.n_clusters, "synthetic clusters"),
        SCCDGA_REAL_KEY("sigma", Group::synth, synth.sigma, "expression noise"),
        SCCDGA_REAL_KEY("rho", Group::synth, synth.rho, "signature overlap with the next cluster"),
        SCCDGA_INT_KEY("blocks", Group::synth, synth.n_blocks, "gene blocks in the network"),
        SCCDGA_REAL_KEY("intra_p", Group::synth, synth.intra_block_p, "within-block edge probability"),
        SCCDGA_REAL_KEY("inter_p", Group::synth, synth.inter_block_p, "between-block edge probability"),
        SCCDGA_REAL_KEY("high_mean", Group::synth, synth.high_mean, "mean of signature genes"),
        SCCDGA_REAL_KEY("low_mean", Group::synth, synth.low_mean, "mean of background genes"),
        SCCDGA_STR_KEY("assignments", Group::evaluate, assignments, "cluster assignments (cell_id,cluster)"),
        SCCDGA_STR_KEY("embedding", Group::evaluate, embedding, "cell embedding (cell_id,z1,...)"),
        {"seed", Group::harness, "seed shared by every random component",
         [](RunConfig& c, const std::string& v) { c.seed = detail::to_u64("seed", v); },
         [](const RunConfig& c) { return std::to_string(c.seed); }},
        SCCDGA_INT_KEY("threads", Group::harness, threads, "concurrent runs in the ablation and sweep harnesses"),
        {"seeds", Group::harness, "comma separated seeds for the ablation harness (default: --seed)",
         [](RunConfig& c, const std::string& v) {
             c.seeds.clear();
             if (sccdga::detail::trim(v).empty()) return;
             for (const auto& f : sccdga::detail::split(v, ',')) c.seeds.push_back(detail::to_u64("seeds", f));
         },
         [](const RunConfig& c) { return detail::join(c.seeds); }},
    };
    return table;
}

#undef SCCDGA_INT_KEY
#undef SCCDGA_REAL_KEY
#undef SCCDGA_BOOL_KEY
#undef SCCDGA_STR_KEY

inline const Key* find_key(const std::string& name) {
    for (const auto& k : keys()) {
        if (k.name == name) return &k;
    }
    return nullptr;
}

/**
 * Parses `key = value` lines. Blank lines and lines starting with `#` or `;`
 * are skipped, as are `[section]` headers. Unknown keys are errors.
 */
inline std::map<std::string, std::string> read_config(const std::filesystem::path& path) {
    auto in = sccdga::detail::open_input(path);
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = sccdga::detail::trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';' || t[0] == '[') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(path.string() + ": expected key = value", lineno);
        const auto key = sccdga::detail::trim(t.substr(0, eq));
        if (!find_key(key)) throw ParseError(path.string() + ": unknown key '" + key + "'", lineno);
        out[key] = sccdga::detail::trim(t.substr(eq + 1));
    }
    return out;
}

/// `key = value` lines for every key, defaults included.
inline std::string echo_config(const RunConfig& c) {
    std::ostringstream s;
    for (const auto& k : keys()) s << k.name << " = " << k.get(c) << '\n';
    return s.str();
}

}

#endif
