#ifndef SCCDGA_INGEST_HPP
#define SCCDGA_INGEST_HPP

#include "error.hpp"
#include "matrix.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

/**
 * @file ingest.hpp
 *
 * @brief Loading of expression matrices, labels and PPI edge lists, plus the
 * preprocessing chain (quality control, log-normalization, HVG selection).
 *
 * Every preprocessing step returns a new `ExpressionMatrix` and checks the
 * processing stage of its input, so steps can only be applied in order.
 */

namespace sccdga {

enum class Stage { raw = 0, qc_filtered = 1, normalized = 2, hvg_selected = 3 };

inline const char* stage_name(Stage s) {
    switch (s) {
        case Stage::raw: return "raw";
        case Stage::qc_filtered: return "qc_filtered";
        case Stage::normalized: return "normalized";
        case Stage::hvg_selected: return "hvg_selected";
    }
    return "unknown";
}

/**
 * Cells x genes expression matrix with row and column identifiers.
 */
struct ExpressionMatrix {
    Matrix values;
    std::vector<std::string> cell_ids;
    std::vector<std::string> gene_symbols;
    Stage stage = Stage::raw;

    std::size_t n_cells() const { return cell_ids.size(); }
    std::size_t n_genes() const { return gene_symbols.size(); }

    /**
     * Throws `DomainError` if the dimensions disagree with the identifiers,
     * gene symbols repeat, or any value is negative or non-finite.
     */
    void validate() const {
        if (static_cast<std::size_t>(values.rows()) != cell_ids.size()) {
            throw DomainError("expression matrix has " + std::to_string(values.rows()) + " rows but " + std::to_string(cell_ids.size()) + " cell IDs");
        }
        if (static_cast<std::size_t>(values.cols()) != gene_symbols.size()) {
            throw DomainError("expression matrix has " + std::to_string(values.cols()) + " columns but " + std::to_string(gene_symbols.size()) + " gene symbols");
        }
        std::unordered_set<std::string> seen;
        for (const auto& g : gene_symbols) {
            if (!seen.insert(g).second) {
                throw DomainError("duplicate gene symbol '" + g + "'");
            }
        }
        if (!values.allFinite()) {
            throw DomainError("expression matrix contains non-finite values");
        }
        if (values.size() && values.minCoeff() < 0) {
            throw DomainError("expression matrix contains negative values");
        }
    }
};

enum class ExpressionFormat { csv, mtx_triplet };

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

inline bool parse_index(const std::string& s, long long& out) {
    if (s.empty()) return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline bool blank(const std::string& line) {
    return trim(line).empty();
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open '" + path.string() + "'");
    }
    return in;
}

inline std::vector<std::string> read_id_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (!t.empty()) ids.push_back(std::move(t));
    }
    return ids;
}

}

/**
 * Reads a CSV expression matrix: header row of gene symbols (its first field
 * labels the ID column and is ignored), then one row per cell starting with
 * the cell ID.
 */
inline ExpressionMatrix read_expression_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++lineno;
        if (!detail::blank(line)) {
            header = detail::split(line, ',');
            break;
        }
    }
    if (header.size() < 2) {
        throw ParseError("missing header row of gene symbols", lineno);
    }

    ExpressionMatrix out;
    out.gene_symbols.assign(header.begin() + 1, header.end());
    const std::size_t ngenes = out.gene_symbols.size();

    std::vector<double> buffer;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank(line)) continue;
        auto fields = detail::split(line, ',');
        if (fields.size() != ngenes + 1) {
            throw ParseError("expected " + std::to_string(ngenes + 1) + " fields, found " + std::to_string(fields.size()), lineno);
        }
        out.cell_ids.push_back(fields[0]);
        for (std::size_t g = 0; g < ngenes; ++g) {
            double v;
            if (!detail::parse_double(fields[g + 1], v)) {
                throw ParseError("non-numeric value '" + fields[g + 1] + "'", lineno);
            }
            if (v < 0) {
                throw DomainError("negative expression value " + fields[g + 1] + " at line " + std::to_string(lineno));
            }
            buffer.push_back(v);
        }
    }
    if (out.cell_ids.empty()) {
        throw DomainError("no cells");
    }

    out.values = Eigen::Map<Matrix>(buffer.data(), static_cast<Eigen::Index>(out.cell_ids.size()), static_cast<Eigen::Index>(ngenes));
    out.stage = Stage::raw;
    out.validate();
    return out;
}

/**
 * Reads whitespace-separated `row col value` triplets (0-based) into a dense
 * matrix of the given size; unlisted entries are zero.
 */
inline ExpressionMatrix read_expression_triplets(std::istream& in, std::vector<std::string> cell_ids, std::vector<std::string> gene_symbols) {
    if (cell_ids.empty()) {
        throw DomainError("no cells");
    }
    ExpressionMatrix out;
    out.values = Matrix::Zero(static_cast<Eigen::Index>(cell_ids.size()), static_cast<Eigen::Index>(gene_symbols.size()));
    out.cell_ids = std::move(cell_ids);
    out.gene_symbols = std::move(gene_symbols);

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::vector<std::string> fields;
        std::string tok;
        while (ls >> tok) fields.push_back(tok);
        if (fields.empty() || fields[0][0] == '%' || fields[0][0] == '#') continue;
        if (fields.size() != 3) {
            throw ParseError("expected 3 fields (row col value), found " + std::to_string(fields.size()), lineno);
        }
        long long r, c;
        double v;
        if (!detail::parse_index(fields[0], r) || !detail::parse_index(fields[1], c) || !detail::parse_double(fields[2], v)) {
            throw ParseError("malformed triplet", lineno);
        }
        if (r < 0 || c < 0 || r >= out.values.rows() || c >= out.values.cols()) {
            throw ParseError("triplet index out of range", lineno);
        }
        if (v < 0) {
            throw DomainError("negative expression value at line " + std::to_string(lineno));
        }
        out.values(r, c) = v;
    }
    out.stage = Stage::raw;
    out.validate();
    return out;
}

/**
 * Loads an expression matrix from disk. For `mtx_triplet`, the sidecar files
 * `<stem>.cells` and `<stem>.genes` supply the identifiers.
 */
inline ExpressionMatrix load_expression(const std::filesystem::path& path, ExpressionFormat format = ExpressionFormat::csv) {
    auto in = detail::open_input(path);
    if (format == ExpressionFormat::csv) {
        return read_expression_csv(in);
    }
    auto stem = path;
    stem.replace_extension();
    auto cells = detail::read_id_file(stem.string() + ".cells");
    auto genes = detail::read_id_file(stem.string() + ".genes");
    return read_expression_triplets(in, std::move(cells), std::move(genes));
}

inline void write_expression_csv(std::ostream& out, const ExpressionMatrix& x) {
    out << "cell_id";
    for (const auto& g : x.gene_symbols) out << ',' << g;
    out << '\n';
    out << std::setprecision(17);
    for (Eigen::Index i = 0; i < x.values.rows(); ++i) {
        out << x.cell_ids[i];
        for (Eigen::Index j = 0; j < x.values.cols(); ++j) out << ',' << x.values(i, j);
        out << '\n';
    }
}

inline void write_expression_csv(const std::filesystem::path& path, const ExpressionMatrix& x) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");
    write_expression_csv(out, x);
}

/**
 * Writes the nonzero entries as triplets plus the `.cells`/`.genes` sidecars.
 */
inline void write_expression_triplets(const std::filesystem::path& path, const ExpressionMatrix& x) {
    auto stem = path;
    stem.replace_extension();
    std::ofstream out(path), cells(stem.string() + ".cells"), genes(stem.string() + ".genes");
    if (!out || !cells || !genes) throw ParseError("cannot write '" + path.string() + "'");
    out << std::setprecision(17);
    for (Eigen::Index i = 0; i < x.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.values.cols(); ++j) {
            if (x.values(i, j) != 0) out << i << ' ' << j << ' ' << x.values(i, j) << '\n';
        }
    }
    for (const auto& c : x.cell_ids) cells << c << '\n';
    for (const auto& g : x.gene_symbols) genes << g << '\n';
}

/**
 * Percentile by linear interpolation between order statistics: position
 * `(n - 1) * p` in the sorted sample, `p` in [0, 1].
 */
inline double percentile_linear(std::vector<double> sample, double p) {
    if (sample.empty()) throw DomainError("percentile of empty sample");
    std::sort(sample.begin(), sample.end());
    const double pos = (static_cast<double>(sample.size()) - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sample.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sample[lo] + frac * (sample[hi] - sample[lo]);
}

/**
 * Acceptance window for per-cell total expression.
 */
struct QcBounds {
    double q1 = 0;
    double q3 = 0;
    /// Semi-interquartile range, (Q3 - Q1) / 2.
    double quartile_deviation = 0;
    double lower = 0;
    double upper = 0;

    bool contains(double total) const { return total >= lower && total <= upper; }
};

/**
 * Bounds `[Q1 - QD, Q3 + 3 QD]` for the given per-cell totals.
 */
inline QcBounds qc_bounds(const std::vector<double>& totals) {
    if (totals.size() < 4) {
        throw DomainError("quality control needs at least 4 cells, got " + std::to_string(totals.size()));
    }
    QcBounds b;
    b.q1 = percentile_linear(totals, 0.25);
    b.q3 = percentile_linear(totals, 0.75);
    b.quartile_deviation = (b.q3 - b.q1) / 2;
    b.lower = b.q1 - b.quartile_deviation;
    b.upper = b.q3 + 3 * b.quartile_deviation;
    return b;
}

namespace detail {

inline void require_stage(const ExpressionMatrix& x, Stage expected, const char* op) {
    if (x.stage != expected) {
        throw DomainError(std::string(op) + " requires stage '" + stage_name(expected) + "', got '" + stage_name(x.stage) + "'");
    }
}

inline ExpressionMatrix select_rows(const ExpressionMatrix& x, const std::vector<Eigen::Index>& rows) {
    ExpressionMatrix out;
    out.values.resize(static_cast<Eigen::Index>(rows.size()), x.values.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.values.row(static_cast<Eigen::Index>(r)) = x.values.row(rows[r]);
        out.cell_ids.push_back(x.cell_ids[rows[r]]);
    }
    out.gene_symbols = x.gene_symbols;
    out.stage = x.stage;
    return out;
}

inline ExpressionMatrix select_cols(const ExpressionMatrix& x, const std::vector<Eigen::Index>& cols) {
    ExpressionMatrix out;
    out.values.resize(x.values.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
        out.values.col(static_cast<Eigen::Index>(c)) = x.values.col(cols[c]);
        out.gene_symbols.push_back(x.gene_symbols[cols[c]]);
    }
    out.cell_ids = x.cell_ids;
    out.stage = x.stage;
    return out;
}

}

/**
 * Drops cells whose total expression lies outside `qc_bounds()` of all totals.
 */
inline ExpressionMatrix qc_filter_cells(const ExpressionMatrix& x) {
    detail::require_stage(x, Stage::raw, "qc_filter_cells");
    std::vector<double> totals(x.n_cells());
    for (std::size_t i = 0; i < totals.size(); ++i) {
        totals[i] = x.values.row(static_cast<Eigen::Index>(i)).sum();
    }
    const auto bounds = qc_bounds(totals);

    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < totals.size(); ++i) {
        if (bounds.contains(totals[i])) keep.push_back(static_cast<Eigen::Index>(i));
    }
    if (keep.empty()) {
        throw DomainError("quality control removed every cell");
    }
    auto out = detail::select_rows(x, keep);
    out.stage = Stage::qc_filtered;
    return out;
}

/**
 * Rescales each gene to [0, 1] by its maximum (all-zero genes stay zero).
 * Optional step between quality control and log-normalization.
 */
inline ExpressionMatrix scale_genes_by_max(const ExpressionMatrix& x) {
    detail::require_stage(x, Stage::qc_filtered, "scale_genes_by_max");
    ExpressionMatrix out = x;
    for (Eigen::Index j = 0; j < out.values.cols(); ++j) {
        const double m = out.values.col(j).maxCoeff();
        if (m > 0) out.values.col(j) /= m;
    }
    return out;
}

/// `log2(v + 1)` for every entry.
inline ExpressionMatrix log_normalize(const ExpressionMatrix& x) {
    detail::require_stage(x, Stage::qc_filtered, "log_normalize");
    ExpressionMatrix out = x;
    out.values = x.values.unaryExpr([](double v) { return std::log2(v + 1.0); });
    out.stage = Stage::normalized;
    return out;
}

/// Population variance of each column.
inline std::vector<double> column_variances(const Matrix& m) {
    std::vector<double> out(static_cast<std::size_t>(m.cols()));
    const double n = static_cast<double>(m.rows());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double mean = m.col(j).sum() / n;
        out[static_cast<std::size_t>(j)] = (m.col(j).array() - mean).square().sum() / n;
    }
    return out;
}

/**
 * Keeps the `n` genes with the largest variance, preserving their original
 * column order. Equal variances are ranked by gene symbol.
 */
inline ExpressionMatrix select_hvg(const ExpressionMatrix& x, std::size_t n = 2000) {
    detail::require_stage(x, Stage::normalized, "select_hvg");
    if (n == 0) {
        throw DomainError("number of highly variable genes must be positive");
    }
    std::vector<Eigen::Index> cols(x.n_genes());
    std::iota(cols.begin(), cols.end(), 0);
    if (x.n_genes() > n) {
        const auto var = column_variances(x.values);
        std::sort(cols.begin(), cols.end(), [&](Eigen::Index a, Eigen::Index b) {
            if (var[a] != var[b]) return var[a] > var[b];
            return x.gene_symbols[a] < x.gene_symbols[b];
        });
        cols.resize(n);
        std::sort(cols.begin(), cols.end());
    }
    auto out = detail::select_cols(x, cols);
    out.stage = Stage::hvg_selected;
    return out;
}

/**
 * Undirected, unweighted-for-walks interaction network. Edges are stored with
 * `a < b` and sorted, so two networks with the same content compare equal.
 */
struct PpiNetwork {
    struct Edge {
        std::string a;
        std::string b;
        double weight = 0;

        bool operator==(const Edge&) const = default;
    };

    /// Sorted, unique symbols seen in the source file (edge endpoints and isolated nodes).
    std::vector<std::string> nodes;
    std::vector<Edge> edges;
    int score_threshold = 0;

    bool operator==(const PpiNetwork&) const = default;

    /**
     * Sub-network induced by `genes`; nodes not in the set are removed along
     * with their edges, and genes without any file entry are not added.
     */
    PpiNetwork restrict_to(const std::vector<std::string>& genes) const {
        std::unordered_set<std::string> keep(genes.begin(), genes.end());
        PpiNetwork out;
        out.score_threshold = score_threshold;
        for (const auto& n : nodes) {
            if (keep.count(n)) out.nodes.push_back(n);
        }
        for (const auto& e : edges) {
            if (keep.count(e.a) && keep.count(e.b)) out.edges.push_back(e);
        }
        return out;
    }
};

/**
 * Reads a tab-separated export with a `gene1 gene2 combined_score` header
 * (columns located by name). Edges below `score_threshold` and self-edges are
 * dropped; duplicate pairs in either orientation keep the maximum score.
 */
inline PpiNetwork read_ppi(std::istream& in, int score_threshold = 400) {
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++lineno;
        if (!detail::blank(line)) {
            header = detail::split(line, '\t');
            break;
        }
    }
    auto column = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ParseError("PPI header is missing column '" + name + "'", lineno);
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto c1 = column("gene1"), c2 = column("gene2"), cs = column("combined_score");
    const auto width = std::max({c1, c2, cs}) + 1;

    std::map<std::pair<std::string, std::string>, double> best;
    std::unordered_set<std::string> symbols;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank(line)) continue;
        auto fields = detail::split(line, '\t');
        if (fields.size() < width) {
            throw ParseError("expected at least " + std::to_string(width) + " columns, found " + std::to_string(fields.size()), lineno);
        }
        double score;
        if (!detail::parse_double(fields[cs], score)) {
            throw ParseError("non-numeric combined_score '" + fields[cs] + "'", lineno);
        }
        const auto& a = fields[c1];
        const auto& b = fields[c2];
        symbols.insert(a);
        symbols.insert(b);
        if (a == b || score < score_threshold) continue;
        auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
        auto [it, inserted] = best.emplace(key, score);
        if (!inserted) it->second = std::max(it->second, score);
    }

    PpiNetwork net;
    net.score_threshold = score_threshold;
    net.nodes.assign(symbols.begin(), symbols.end());
    std::sort(net.nodes.begin(), net.nodes.end());
    for (const auto& [key, score] : best) {
        net.edges.push_back({key.first, key.second, score});
    }
    return net;
}

inline PpiNetwork load_ppi(const std::filesystem::path& path, int score_threshold = 400) {
    auto in = detail::open_input(path);
    return read_ppi(in, score_threshold);
}

inline void write_ppi(const std::filesystem::path& path, const PpiNetwork& net) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");
    out << "gene1\tgene2\tcombined_score\n";
    for (const auto& e : net.edges) out << e.a << '\t' << e.b << '\t' << e.weight << '\n';
}

/**
 * Class labels encoded as contiguous integers in order of first appearance.
 */
struct LabelVector {
    std::vector<int> labels;
    /// Original label string for each class ID.
    std::vector<std::string> names;

    std::size_t size() const { return labels.size(); }
    int n_classes() const { return static_cast<int>(names.size()); }

    /// Labels of the listed positions, re-encoded by first appearance.
    LabelVector subset(const std::vector<std::size_t>& positions) const {
        LabelVector out;
        std::map<int, int> remap;
        for (auto p : positions) {
            const int old = labels.at(p);
            auto [it, inserted] = remap.emplace(old, static_cast<int>(out.names.size()));
            if (inserted) out.names.push_back(names[old]);
            out.labels.push_back(it->second);
        }
        return out;
    }
};

/**
 * Reads `cell_id,label` rows (an optional `cell_id,label` header is skipped)
 * and aligns them to `cell_ids`. Every listed ID needs exactly one row, and
 * rows for unknown IDs are rejected.
 */
inline LabelVector read_labels(std::istream& in, const std::vector<std::string>& cell_ids) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < cell_ids.size(); ++i) index.emplace(cell_ids[i], i);

    std::vector<std::string> raw(cell_ids.size());
    std::vector<bool> filled(cell_ids.size(), false);
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank(line)) continue;
        auto fields = detail::split(line, ',');
        if (fields.size() != 2) {
            throw ParseError("expected 2 fields (cell_id,label), found " + std::to_string(fields.size()), lineno);
        }
        if (first && fields[0] == "cell_id" && fields[1] == "label") {
            first = false;
            continue;
        }
        first = false;
        auto it = index.find(fields[0]);
        if (it == index.end()) {
            throw DomainError("label row for unknown cell '" + fields[0] + "' at line " + std::to_string(lineno));
        }
        if (filled[it->second]) {
            throw DomainError("duplicate label row for cell '" + fields[0] + "' at line " + std::to_string(lineno));
        }
        raw[it->second] = fields[1];
        filled[it->second] = true;
    }
    for (std::size_t i = 0; i < cell_ids.size(); ++i) {
        if (!filled[i]) throw DomainError("no label for cell '" + cell_ids[i] + "'");
    }

    LabelVector out;
    std::unordered_map<std::string, int> codes;
    for (const auto& r : raw) {
        auto [it, inserted] = codes.emplace(r, static_cast<int>(out.names.size()));
        if (inserted) out.names.push_back(r);
        out.labels.push_back(it->second);
    }
    return out;
}

inline LabelVector load_labels(const std::filesystem::path& path, const std::vector<std::string>& cell_ids) {
    auto in = detail::open_input(path);
    return read_labels(in, cell_ids);
}

/// Cell IDs of a label file in file order.
inline std::vector<std::string> labeled_cells(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    std::vector<std::string> ids;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (detail::blank(line)) continue;
        auto fields = detail::split(line, ',');
        if (first && fields.size() == 2 && fields[0] == "cell_id" && fields[1] == "label") {
            first = false;
            continue;
        }
        first = false;
        ids.push_back(fields[0]);
    }
    return ids;
}

inline void write_labels(const std::filesystem::path& path, const std::vector<std::string>& cell_ids, const LabelVector& labels) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");
    out << "cell_id,label\n";
    for (std::size_t i = 0; i < cell_ids.size(); ++i) out << cell_ids[i] << ',' << labels.names[labels.labels[i]] << '\n';
}

/**
 * Position of each of `ids` within `universe`; throws if one is missing.
 */
inline std::vector<std::size_t> positions_of(const std::vector<std::string>& ids, const std::vector<std::string>& universe) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < universe.size(); ++i) index.emplace(universe[i], i);
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = index.find(id);
        if (it == index.end()) throw DomainError("unknown identifier '" + id + "'");
        out.push_back(it->second);
    }
    return out;
}

}

#endif
