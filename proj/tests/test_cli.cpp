#include <sccdga/sccdga.hpp>

#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(SCCDGA_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::size_t count_lines(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) n += !line.empty();
    return n;
}

class Cli : public ::testing::Test {
protected:
    static fs::path root;
    static std::string data_flags;

    static void SetUpTestSuite() {
        root = fs::temp_directory_path() / "sccdga_cli_tests";
        fs::remove_all(root);
        fs::create_directories(root);
        ASSERT_EQ(run("synth --cells 60 --genes 40 --synth-clusters 3 --blocks 4 --seed 2 --out " + (root / "data").string()), 0);
        const auto d = root / "data";
        data_flags = "--expression " + (d / "expression.csv").string() + " --ppi " + (d / "ppi.tsv").string() + " --labels " + (d / "labels.csv").string() +
                     " --clusters 3 --hvg 40 --k 5 --walks-per-node 2 --walk-length 10 --dim 8 --sg-epochs 1 --encoder-dims 16,8,4 --pretrain-epochs 10"
                     " --train-epochs 20 --target-refresh-interval 10 --silhouette-eval-interval 10";
    }

    static void TearDownTestSuite() { fs::remove_all(root); }

    static fs::path dir(const std::string& name) { return root / name; }
};

fs::path Cli::root;
std::string Cli::data_flags;

}

TEST_F(Cli, SynthWritesDatasetAndBaseline) {
    const auto d = dir("data");
    for (const char* f : {"expression.csv", "labels.csv", "ppi.tsv", "synth_summary.json", "manifest.json"}) EXPECT_TRUE(fs::exists(d / f)) << f;
    const auto j = nlohmann::json::parse(slurp(d / "synth_summary.json"));
    EXPECT_TRUE(j.contains("baseline_kmeans_ari"));
}

TEST_F(Cli, TrainWritesBundleAndManifest) {
    ASSERT_EQ(run("train " + data_flags + " --seed 3 --out " + dir("train").string()), 0);
    for (const char* f : {"assignments.csv", "embedding.csv", "losses.csv", "report.json", "config.ini", "model.ckpt", "manifest.json"}) {
        EXPECT_TRUE(fs::exists(dir("train") / f)) << f;
    }
    const auto report = nlohmann::json::parse(slurp(dir("train") / "report.json"));
    EXPECT_EQ(count_lines(dir("train") / "assignments.csv"), report["cells"].get<std::size_t>() + 1);
    EXPECT_EQ(report["seed"], 3);
    EXPECT_TRUE(report["metrics"].contains("ari"));
    EXPECT_TRUE(report["metrics"].contains("nmi"));
    EXPECT_TRUE(report["metrics"].contains("silhouette"));
    const auto manifest = nlohmann::json::parse(slurp(dir("train") / "manifest.json"));
    EXPECT_FALSE(manifest.dump().find("report.json") == std::string::npos);
}

TEST_F(Cli, SameConfigAndSeedIsByteIdentical) {
    ASSERT_EQ(run("train " + data_flags + " --seed 5 --out " + dir("det_a").string()), 0);
    ASSERT_EQ(run("train " + data_flags + " --seed 5 --out " + dir("det_b").string()), 0);
    EXPECT_EQ(slurp(dir("det_a") / "assignments.csv"), slurp(dir("det_b") / "assignments.csv"));
    EXPECT_EQ(slurp(dir("det_a") / "embedding.csv"), slurp(dir("det_b") / "embedding.csv"));
}

TEST_F(Cli, EchoedConfigReproducesTheRun) {
    ASSERT_EQ(run("train " + data_flags + " --seed 8 --out " + dir("echo_a").string()), 0);
    ASSERT_EQ(run("train --config " + (dir("echo_a") / "config.ini").string() + " --out " + dir("echo_b").string()), 0);
    EXPECT_EQ(slurp(dir("echo_a") / "assignments.csv"), slurp(dir("echo_b") / "assignments.csv"));
    EXPECT_EQ(slurp(dir("echo_a") / "embedding.csv"), slurp(dir("echo_b") / "embedding.csv"));
}

TEST_F(Cli, RunWithoutLabelsOmitsSupervisedMetrics) {
    const auto d = dir("data");
    std::string flags = data_flags;
    flags.replace(flags.find("--labels"), std::string("--labels " + (d / "labels.csv").string()).size(), "");
    ASSERT_EQ(run("train " + flags + " --out " + dir("nolabels").string()), 0);
    const auto report = nlohmann::json::parse(slurp(dir("nolabels") / "report.json"));
    EXPECT_FALSE(report["metrics"].contains("ari"));
    EXPECT_FALSE(report["metrics"].contains("nmi"));
    EXPECT_TRUE(report["metrics"].contains("silhouette"));
}

TEST_F(Cli, FlagOverridesConfigFile) {
    const auto cfg = root / "override.ini";
    std::ofstream(cfg) << "hvg = 0\nclusters = 3\n";
    // the file alone is invalid; the flag fixes it
    EXPECT_EQ(run("preprocess --config " + cfg.string() + " --expression " + (dir("data") / "expression.csv").string() + " --out " + dir("ov_bad").string()), 2);
    EXPECT_EQ(run("preprocess --config " + cfg.string() + " --hvg 25 --expression " + (dir("data") / "expression.csv").string() + " --out " + dir("ov_ok").string()), 0);
    const auto j = nlohmann::json::parse(slurp(dir("ov_ok") / "preprocess_summary.json"));
    EXPECT_EQ(j["genes_kept"], 25);
}

TEST_F(Cli, UsageAndValidationErrorsExitTwo) {
    EXPECT_EQ(run("train --expression /nonexistent/x.csv --clusters 3 --out " + dir("missing").string()), 2);
    EXPECT_EQ(run("preprocess --expression " + (dir("data") / "expression.csv").string() + " --hvg 0 --out " + dir("hvg0").string()), 2);
    EXPECT_TRUE(fs::exists(dir("hvg0") / "FAILED"));
    EXPECT_EQ(run("train --no-such-flag 1 --out " + dir("badflag").string()), 2);
    EXPECT_EQ(run("train " + data_flags + " --lambda 1.5 --out " + dir("badlambda").string()), 2);
    const auto cfg = root / "unknown.ini";
    std::ofstream(cfg) << "no_such_key = 3\n";
    EXPECT_EQ(run("train --config " + cfg.string() + " --out " + dir("badkey").string()), 2);
}

TEST_F(Cli, StagedCommandsProduceTheirArtifacts) {
    const std::string in = "--expression " + (dir("data") / "expression.csv").string() + " --hvg 40";
    ASSERT_EQ(run("preprocess " + in + " --out " + dir("pre").string()), 0);
    EXPECT_TRUE(fs::exists(dir("pre") / "processed.csv"));
    ASSERT_EQ(run("graph " + in + " --k 5 --out " + dir("graph").string()), 0);
    EXPECT_TRUE(fs::exists(dir("graph") / "cell_graph.csv"));
    ASSERT_EQ(run("embed-genes " + in + " --ppi " + (dir("data") / "ppi.tsv").string() + " --walks-per-node 2 --walk-length 10 --dim 8 --sg-epochs 1 --seed 4 --out " +
                  dir("genes").string()),
              0);
    EXPECT_TRUE(fs::exists(dir("genes") / "gene_embeddings.csv"));

    // a run fed precomputed embeddings matches one that computes them
    ASSERT_EQ(run("train " + data_flags + " --seed 4 --out " + dir("full_run").string()), 0);
    ASSERT_EQ(run("train " + data_flags + " --seed 4 --gene-embeddings " + (dir("genes") / "gene_embeddings.csv").string() + " --out " + dir("pre_run").string()), 0);
    EXPECT_EQ(slurp(dir("full_run") / "assignments.csv"), slurp(dir("pre_run") / "assignments.csv"));
}

TEST_F(Cli, EvaluateScoresAssignments) {
    ASSERT_EQ(run("train " + data_flags + " --seed 6 --out " + dir("ev_train").string()), 0);
    ASSERT_EQ(run("evaluate --assignments " + (dir("ev_train") / "assignments.csv").string() + " --embedding " + (dir("ev_train") / "embedding.csv").string() +
                  " --labels " + (dir("data") / "labels.csv").string() + " --out " + dir("ev").string()),
              0);
    const auto m = nlohmann::json::parse(slurp(dir("ev") / "metrics.json"));
    const auto r = nlohmann::json::parse(slurp(dir("ev_train") / "report.json"));
    EXPECT_NEAR(m["ari"].get<double>(), r["metrics"]["ari"].get<double>(), 1e-12);
    EXPECT_NEAR(m["nmi"].get<double>(), r["metrics"]["nmi"].get<double>(), 1e-12);
    EXPECT_NEAR(m["silhouette"].get<double>(), r["metrics"]["silhouette"].get<double>(), 1e-9);
}

TEST_F(Cli, AblationHasThreeRowsPerSeed) {
    ASSERT_EQ(run("ablate " + data_flags + " --seeds 1,2 --threads 2 --out " + dir("abl").string()), 0);
    EXPECT_EQ(count_lines(dir("abl") / "ablation.csv"), 1u + 6u);
    const auto j = nlohmann::json::parse(slurp(dir("abl") / "ablation.json"));
    EXPECT_EQ(j["seeds"], nlohmann::json::array({1, 2}));
    EXPECT_EQ(j["runs"].size(), 6u);
    for (const char* a : {"full", "no_gat", "no_genemap"}) EXPECT_TRUE(fs::exists(dir("abl") / "seed2" / a / "assignments.csv")) << a;
}

TEST_F(Cli, LambdaSweepHasNineIncreasingRows) {
    ASSERT_EQ(run("sweep-lambda " + data_flags + " --threads 3 --out " + dir("sweep").string()), 0);
    std::ifstream in(dir("sweep") / "sweep.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line.rfind("lambda,ari,nmi", 0), 0u);
    std::vector<double> lambdas;
    while (std::getline(in, line)) {
        if (!line.empty()) lambdas.push_back(std::stod(line.substr(0, line.find(','))));
    }
    ASSERT_EQ(lambdas.size(), 9u);
    for (std::size_t i = 1; i < lambdas.size(); ++i) EXPECT_GT(lambdas[i], lambdas[i - 1]);
    EXPECT_NEAR(lambdas.front(), 0.1, 1e-12);
    EXPECT_NEAR(lambdas.back(), 0.9, 1e-12);
}
