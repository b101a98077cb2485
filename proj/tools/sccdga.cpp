// Command-line front end: synthetic data, preprocessing, graph construction,
// gene embedding, training, evaluation and the ablation / lambda harnesses.

#include "run_config.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace sccdga;
using namespace sccdga::cli;

namespace {

// ---------------------------------------------------------------------------
// outputs

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return hex.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");
    out << text;
}

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

/// Lists every file under `dir` with its size and SHA-256.
void write_manifest(const fs::path& dir, const std::string& command) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), dir);
        if (rel == "manifest.json") continue;
        files.push_back(rel);
    }
    std::sort(files.begin(), files.end());
    ordered_json m;
    m["command"] = command;
    m["artifacts"] = ordered_json::array();
    for (const auto& f : files) {
        m["artifacts"].push_back({{"path", f.generic_string()}, {"bytes", fs::file_size(dir / f)}, {"sha256", sha256_file(dir / f)}});
    }
    write_json(dir / "manifest.json", m);
}

ordered_json config_json(const RunConfig& c) {
    ordered_json j;
    for (const auto& k : keys()) j[k.name] = k.get(c);
    return j;
}

ordered_json optional_number(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

// ---------------------------------------------------------------------------
// shared pipeline steps

struct Loaded {
    ExpressionMatrix matrix;
    PreprocessSummary summary;
    std::optional<LabelVector> labels;
};

void require(const std::string& value, const char* key) {
    if (value.empty()) throw DomainError(std::string("--") + key + " is required");
}

Loaded load_inputs(const RunConfig& c) {
    require(c.expression, "expression");
    if (c.hvg < 1) throw DomainError("hvg must be at least 1");
    auto raw = load_expression(c.expression, c.format == "mtx" ? ExpressionFormat::mtx_triplet : ExpressionFormat::csv);
    Loaded out;
    if (c.preprocessed) {
        raw.stage = Stage::hvg_selected;
        out.summary.cells_in = out.summary.cells_kept = raw.n_cells();
        out.summary.genes_in = out.summary.genes_kept = raw.n_genes();
        out.matrix = raw;
    } else {
        PreprocessOptions opt;
        opt.qc = c.qc;
        opt.scale = c.scale;
        opt.hvg = static_cast<std::size_t>(c.hvg);
        auto p = preprocess(raw, opt);
        out.matrix = std::move(p.matrix);
        out.summary = p.summary;
    }
    if (!c.labels.empty()) {
        const auto all = load_labels(c.labels, raw.cell_ids);
        out.labels = all.subset(positions_of(out.matrix.cell_ids, raw.cell_ids));
    }
    return out;
}

ordered_json summary_json(const PreprocessSummary& s) {
    ordered_json j;
    j["cells_in"] = s.cells_in;
    j["cells_kept"] = s.cells_kept;
    j["cells_dropped"] = s.cells_in - s.cells_kept;
    j["genes_in"] = s.genes_in;
    j["genes_kept"] = s.genes_kept;
    if (s.bounds) {
        j["qc"] = {{"q1", s.bounds->q1}, {"q3", s.bounds->q3}, {"quartile_deviation", s.bounds->quartile_deviation}, {"lower", s.bounds->lower}, {"upper", s.bounds->upper}};
    }
    return j;
}

PreparedData prepare_data(const RunConfig& c, const Loaded& loaded, bool need_genes) {
    std::optional<PpiNetwork> ppi;
    std::optional<GeneEmbeddings> emb;
    if (!c.gene_embeddings.empty()) {
        emb = load_embeddings(c.gene_embeddings);
    } else if (!c.ppi.empty()) {
        ppi = load_ppi(c.ppi, c.ppi_threshold);
    } else if (need_genes) {
        throw DomainError("--ppi or --gene-embeddings is required unless ablation = no_genemap");
    }
    GraphOptions g;
    g.k = c.k;
    auto data = prepare(loaded.matrix, g, ppi ? &*ppi : nullptr, c.walk, c.skipgram, emb ? &*emb : nullptr);
    data.labels = loaded.labels;
    return data;
}

/// Writes the per-run bundle into `dir` and returns the report.
ordered_json write_bundle(const fs::path& dir, const std::string& command, const RunConfig& c, const PreparedData& data, const PreprocessSummary& summary,
                          const ClusterResult& r) {
    fs::create_directories(dir);
    write_assignments(dir / "assignments.csv", data.matrix.cell_ids, r.labels);
    write_embedding(dir / "embedding.csv", data.matrix.cell_ids, r.embedding);
    write_losses(dir / "losses.csv", r.trace);
    write_losses(dir / "pretrain_losses.csv", r.pretrain_trace);
    write_checkpoint(dir / "model.ckpt", r.state.params);
    write_text(dir / "config.ini", echo_config(c));

    ordered_json rep;
    rep["command"] = command;
    rep["seed"] = c.seed;
    rep["ablation"] = ablation_name(r.ablation);
    rep["lambda"] = c.model.effective_lambda();
    ordered_json metrics;
    if (r.ari) metrics["ari"] = *r.ari;
    if (r.nmi) metrics["nmi"] = *r.nmi;
    metrics["silhouette"] = r.silhouette;
    rep["metrics"] = metrics;
    rep["best_epoch"] = r.best_epoch;
    rep["epochs_run"] = r.epochs_run;
    rep["stopped_early"] = r.stopped_early;
    rep["cells"] = data.matrix.n_cells();
    rep["genes"] = data.matrix.n_genes();
    rep["preprocessing"] = summary_json(summary);
    rep["config"] = config_json(c);
    write_json(dir / "report.json", rep);
    return rep;
}

std::string metric_line(const ClusterResult& r) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4);
    if (r.ari) s << "ARI " << *r.ari << "  NMI " << *r.nmi << "  ";
    s << "SC " << r.silhouette;
    return s.str();
}

/// Runs `jobs` on up to `threads` workers; rethrows the first failure in job order.
void run_parallel(std::size_t jobs, int threads, const std::function<void(std::size_t)>& job) {
    std::vector<std::exception_ptr> errors(jobs);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs; i = next++) {
            try {
                job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto n = std::max<std::size_t>(1, std::min<std::size_t>(jobs, static_cast<std::size_t>(std::max(threads, 1))));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// ---------------------------------------------------------------------------
// commands

void cmd_synth(const RunConfig& c, const fs::path& out) {
    const auto data = generate(c.synth);
    write_synth(out, data);
    KmeansOptions ko;
    ko.seed = c.seed;
    const auto km = kmeans(data.expression.values, c.synth.n_clusters, ko);
    ordered_json j;
    j["cells"] = c.synth.n_cells;
    j["genes"] = c.synth.n_genes;
    j["clusters"] = c.synth.n_clusters;
    j["sigma"] = c.synth.sigma;
    j["rho"] = c.synth.rho;
    j["blocks"] = c.synth.n_blocks;
    j["ppi_edges"] = data.ppi.edges.size();
    j["seed"] = c.seed;
    j["baseline_kmeans_ari"] = ari(data.labels.labels, km.labels);
    write_json(out / "synth_summary.json", j);
    std::cout << "wrote " << c.synth.n_cells << " cells x " << c.synth.n_genes << " genes, k-means baseline ARI " << std::fixed << std::setprecision(4)
              << j["baseline_kmeans_ari"].get<double>() << '\n';
}

void cmd_preprocess(const RunConfig& c, const fs::path& out) {
    const auto loaded = load_inputs(c);
    write_expression_csv(out / "processed.csv", loaded.matrix);
    write_json(out / "preprocess_summary.json", summary_json(loaded.summary));
    std::cout << "kept " << loaded.summary.cells_kept << " of " << loaded.summary.cells_in << " cells, " << loaded.summary.genes_kept << " genes\n";
}

void cmd_graph(const RunConfig& c, const fs::path& out) {
    const auto loaded = load_inputs(c);
    const auto graph = knn_graph(pearson_similarity(loaded.matrix), c.k);
    write_edge_list(out / "cell_graph.csv", graph);
    ordered_json j;
    j["cells"] = graph.n_nodes();
    j["k"] = c.k;
    j["edges"] = graph.n_edges();
    write_json(out / "graph_summary.json", j);
    std::cout << graph.n_nodes() << " cells, " << graph.n_edges() << " edges\n";
}

void cmd_embed_genes(const RunConfig& c, const fs::path& out) {
    require(c.ppi, "ppi");
    const auto loaded = load_inputs(c);
    const auto ppi = load_ppi(c.ppi, c.ppi_threshold);
    const auto emb = embed_genes(ppi, loaded.matrix.gene_symbols, c.walk, c.skipgram);
    write_embeddings(out / "gene_embeddings.csv", emb);
    std::size_t embedded = 0;
    for (Eigen::Index i = 0; i < emb.vectors.rows(); ++i) embedded += emb.vectors.row(i).squaredNorm() > 0;
    ordered_json j;
    j["genes_in_network"] = emb.genes.size();
    j["genes_embedded"] = embedded;
    j["dim"] = emb.dim();
    j["loss_trace"] = emb.loss_trace;
    write_json(out / "embedding_summary.json", j);
    std::cout << "embedded " << embedded << " genes in " << emb.dim() << " dimensions\n";
}

void cmd_train(const RunConfig& c, const fs::path& out) {
    c.model.validate();
    const auto loaded = load_inputs(c);
    const auto data = prepare_data(c, loaded, c.model.uses_gene_branch());
    const auto r = run_model(data, c.model);
    write_bundle(out, "train", c, data, loaded.summary, r);
    std::cout << metric_line(r) << '\n';
}

void cmd_evaluate(const RunConfig& c, const fs::path& out) {
    require(c.assignments, "assignments");
    const auto [ids, clusters] = read_assignments(c.assignments);
    ordered_json j;
    j["cells"] = ids.size();
    std::ostringstream line;
    line << std::fixed << std::setprecision(4);
    if (!c.labels.empty()) {
        const auto listed = labeled_cells(c.labels);
        const auto truth = load_labels(c.labels, listed).subset(positions_of(ids, listed));
        j["ari"] = ari(truth.labels, clusters);
        j["nmi"] = nmi(truth.labels, clusters);
        line << "ARI " << j["ari"].get<double>() << "  NMI " << j["nmi"].get<double>() << "  ";
    }
    if (!c.embedding.empty()) {
        const auto [emb_ids, emb] = read_embedding(c.embedding);
        const auto pos = positions_of(ids, emb_ids);
        Matrix z(static_cast<Eigen::Index>(ids.size()), emb.cols());
        for (std::size_t i = 0; i < pos.size(); ++i) z.row(static_cast<Eigen::Index>(i)) = emb.row(static_cast<Eigen::Index>(pos[i]));
        j["silhouette"] = silhouette(z, clusters);
        line << "SC " << j["silhouette"].get<double>();
    }
    write_json(out / "metrics.json", j);
    std::cout << line.str() << '\n';
}

struct Member {
    std::uint64_t seed;
    Ablation ablation;
    double lambda;
    fs::path dir;
    ClusterResult result;
};

void cmd_ablate(const RunConfig& c, const fs::path& out) {
    const auto seeds = c.seeds.empty() ? std::vector<std::uint64_t>{c.seed} : c.seeds;
    std::vector<Member> members;
    for (auto s : seeds) {
        for (auto a : {Ablation::full, Ablation::no_gat, Ablation::no_genemap}) {
            members.push_back({s, a, c.model.lambda, out / ("seed" + std::to_string(s)) / ablation_name(a), {}});
        }
    }
    const auto loaded = load_inputs(c);
    std::map<std::uint64_t, PreparedData> data;
    for (auto s : seeds) {
        RunConfig sc = c;
        sc.seed = s;
        sc.apply_seed();
        data.emplace(s, prepare_data(sc, loaded, true));
    }
    run_parallel(members.size(), c.threads, [&](std::size_t i) {
        auto& m = members[i];
        RunConfig mc = c;
        mc.seed = m.seed;
        mc.apply_seed();
        mc.model.ablation = m.ablation;
        m.result = run_model(data.at(m.seed), mc.model);
        write_bundle(m.dir, "ablate", mc, data.at(m.seed), loaded.summary, m.result);
    });

    std::ostringstream csv;
    csv << "seed,ablation,ari,nmi,silhouette,best_epoch\n" << std::setprecision(10);
    ordered_json j;
    j["seeds"] = seeds;
    j["runs"] = ordered_json::array();
    for (const auto& m : members) {
        csv << m.seed << ',' << ablation_name(m.ablation) << ',';
        if (m.result.ari) csv << *m.result.ari;
        csv << ',';
        if (m.result.nmi) csv << *m.result.nmi;
        csv << ',' << m.result.silhouette << ',' << m.result.best_epoch << '\n';
        j["runs"].push_back({{"seed", m.seed},
                             {"ablation", ablation_name(m.ablation)},
                             {"ari", optional_number(m.result.ari)},
                             {"nmi", optional_number(m.result.nmi)},
                             {"silhouette", m.result.silhouette},
                             {"best_epoch", m.result.best_epoch}});
        std::cout << "seed " << m.seed << "  " << std::left << std::setw(11) << ablation_name(m.ablation) << metric_line(m.result) << '\n';
    }
    write_text(out / "ablation.csv", csv.str());
    write_json(out / "ablation.json", j);
}

void cmd_sweep_lambda(const RunConfig& c, const fs::path& out) {
    if (!c.model.uses_gene_branch()) throw DomainError("a lambda sweep needs the gene branch; ablation must not be no_genemap");
    std::vector<Member> members;
    for (int i = 1; i <= 9; ++i) {
        const double lambda = i / 10.0;
        std::ostringstream name;
        name << "lambda" << lambda;
        members.push_back({c.seed, c.model.ablation, lambda, out / name.str(), {}});
    }
    const auto loaded = load_inputs(c);
    const auto data = prepare_data(c, loaded, true);
    run_parallel(members.size(), c.threads, [&](std::size_t i) {
        auto& m = members[i];
        RunConfig mc = c;
        mc.model.lambda = m.lambda;
        m.result = run_model(data, mc.model);
        write_bundle(m.dir, "sweep-lambda", mc, data, loaded.summary, m.result);
    });

    std::ostringstream csv;
    csv << "lambda,ari,nmi,silhouette,best_epoch\n";
    for (const auto& m : members) {
        csv << m.lambda << ',' << std::setprecision(10);
        if (m.result.ari) csv << *m.result.ari;
        csv << ',';
        if (m.result.nmi) csv << *m.result.nmi;
        csv << ',' << m.result.silhouette << ',' << m.result.best_epoch << '\n' << std::setprecision(6);
        std::cout << "lambda " << m.lambda << "  " << metric_line(m.result) << '\n';
    }
    write_text(out / "sweep.csv", csv.str());
}

// ---------------------------------------------------------------------------

struct Command {
    const char* name;
    const char* help;
    std::vector<Group> groups;
    void (*run)(const RunConfig&, const fs::path&);
};

const std::vector<Command>& commands() {
    static const std::vector<Command> table = {
        {"synth", "generate a synthetic dataset with known clusters", {Group::synth}, cmd_synth},
        {"preprocess", "quality control, log transform and HVG selection", {Group::input, Group::preprocess}, cmd_preprocess},
        {"graph", "build the cell KNN graph", {Group::input, Group::preprocess, Group::graph}, cmd_graph},
        {"embed-genes", "node2vec embedding of the interaction network", {Group::input, Group::preprocess, Group::genes}, cmd_embed_genes},
        {"train", "run the full clustering pipeline", {Group::input, Group::preprocess, Group::graph, Group::genes, Group::model}, cmd_train},
        {"evaluate", "score assignments against labels", {Group::input, Group::evaluate}, cmd_evaluate},
        {"ablate", "compare full, no_gat and no_genemap", {Group::input, Group::preprocess, Group::graph, Group::genes, Group::model, Group::harness}, cmd_ablate},
        {"sweep-lambda", "train for lambda = 0.1, 0.2, ..., 0.9", {Group::input, Group::preprocess, Group::graph, Group::genes, Group::model, Group::harness},
         cmd_sweep_lambda},
    };
    return table;
}

std::string dashed(std::string s) {
    std::replace(s.begin(), s.end(), '_', '-');
    return s;
}

int fail(const fs::path& out, const std::string& message, int code) {
    std::cerr << "error: " << message << '\n';
    std::error_code ec;
    if (!out.empty() && fs::is_directory(out, ec)) {
        std::ofstream(out / "FAILED") << message << '\n';
    }
    return code;
}

}

int main(int argc, char** argv) {
    CLI::App app{"Single-cell clustering with cell and gene graph autoencoders"};
    app.require_subcommand(1);

    struct Slot {
        const Key* key;
        std::string value;
        CLI::Option* option = nullptr;
    };
    struct Sub {
        const Command* command;
        CLI::App* app;
        std::string config;
        std::string out;
        std::vector<std::unique_ptr<Slot>> slots;
    };
    std::vector<std::unique_ptr<Sub>> subs;

    for (const auto& cmd : commands()) {
        auto sub = std::make_unique<Sub>();
        sub->command = &cmd;
        sub->app = app.add_subcommand(cmd.name, cmd.help);
        sub->app->add_option("--config", sub->config, "key = value settings file (flags override it)");
        sub->app->add_option("--out", sub->out, "output directory")->required();
        for (const auto& k : keys()) {
            const bool shared = k.name == "seed" || k.name == "threads";
            const bool wanted = shared || std::find(cmd.groups.begin(), cmd.groups.end(), k.group) != cmd.groups.end();
            if (!wanted || (k.group == Group::harness && !shared && std::string(cmd.name) != "ablate")) continue;
            auto slot = std::make_unique<Slot>();
            slot->key = &k;
            slot->option = sub->app->add_option("--" + dashed(k.name), slot->value, k.help);
            sub->slots.push_back(std::move(slot));
        }
        subs.push_back(std::move(sub));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const Sub* active = nullptr;
    for (const auto& s : subs) {
        if (s->app->parsed()) active = s.get();
    }
    const fs::path out = active->out;

    try {
        RunConfig cfg;
        if (!active->config.empty()) {
            for (const auto& [name, value] : read_config(active->config)) find_key(name)->set(cfg, value);
        }
        for (const auto& slot : active->slots) {
            if (slot->option->count() > 0) slot->key->set(cfg, slot->value);
        }
        cfg.apply_seed();
        fs::create_directories(out);
        std::error_code ec;
        fs::remove(out / "FAILED", ec);
        active->command->run(cfg, out);
        write_manifest(out, active->command->name);
        return 0;
    } catch (const ParseError& e) {
        return fail(out, e.what(), 2);
    } catch (const DomainError& e) {
        return fail(out, e.what(), 2);
    } catch (const NumericError& e) {
        return fail(out, e.what(), 1);
    } catch (const std::exception& e) {
        return fail(out, e.what(), 1);
    }
}
