#include "lapcert/graph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace lapcert {

namespace {

[[noreturn]] void parse_fail(std::int64_t line_no, const std::string& what) {
    throw ParseError("edge list parse error at line " + std::to_string(line_no) + ": " + what);
}

bool is_blank_or_comment(const std::string& line) {
    for (char c : line) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        return c == '#' || c == '%';
    }
    return true;
}

std::vector<std::string> split_row(const std::string& line, bool csv) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : line) {
        const bool sep = csv ? (c == ',') : std::isspace(static_cast<unsigned char>(c)) != 0;
        if (sep) {
            if (csv || !cur.empty()) tokens.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty() || (csv && !tokens.empty())) tokens.push_back(cur);
    while (!tokens.empty() && tokens.back().empty()) tokens.pop_back();
    return tokens;
}

std::int64_t parse_id(const std::string& tok, std::int64_t line_no) {
    std::int64_t v = 0;
    const auto* first = tok.data();
    const auto* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) parse_fail(line_no, "bad vertex id '" + tok + "'");
    return v;
}

double parse_weight(const std::string& tok, std::int64_t line_no) {
    try {
        std::size_t pos = 0;
        const double w = std::stod(tok, &pos);
        if (pos != tok.size()) parse_fail(line_no, "bad weight '" + tok + "'");
        return w;
    } catch (const std::logic_error&) {
        parse_fail(line_no, "bad weight '" + tok + "'");
    }
}

struct UnionFind {
    std::vector<std::int32_t> parent;
    explicit UnionFind(std::int64_t n) : parent(static_cast<std::size_t>(n)) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    std::int32_t find(std::int32_t x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
    void unite(std::int32_t a, std::int32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
};

}  // namespace

CutVector CutVector::complement() const {
    CutVector c;
    c.bits.resize(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) c.bits[i] = bits[i] ? 0 : 1;
    return c;
}

Graph Graph::from_edges(std::int64_t n, std::vector<EdgeListRow> rows, bool allow_empty) {
    std::int64_t max_id = -1;
    for (const auto& r : rows) {
        if (r.i == r.j) throw std::invalid_argument("self-loop on vertex " + std::to_string(r.i) + " rejected");
        if (r.i < 0 || r.j < 0) throw std::invalid_argument("negative vertex id");
        if (r.w < 0.0) throw std::invalid_argument("negative edge weight rejected");
        max_id = std::max({max_id, r.i, r.j});
    }
    if (n < 0) n = max_id + 1;
    if (max_id >= n)
        throw std::invalid_argument("vertex id " + std::to_string(max_id) + " out of range for n=" + std::to_string(n));
    if (n <= 0 && !allow_empty) throw std::invalid_argument("graph has no vertices");
    if (rows.empty() && !allow_empty) throw std::invalid_argument("empty edge set rejected");

    // Canonical endpoint order, then sort so duplicates become adjacent.
    for (auto& r : rows)
        if (r.i > r.j) std::swap(r.i, r.j);
    std::sort(rows.begin(), rows.end(), [](const EdgeListRow& a, const EdgeListRow& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });

    Graph g;
    g.n_ = n;
    for (std::size_t k = 0; k < rows.size();) {
        std::size_t k2 = k;
        double w = 0.0;
        while (k2 < rows.size() && rows[k2].i == rows[k].i && rows[k2].j == rows[k].j) {
            w += rows[k2].w;
            ++k2;
        }
        if (w > 0.0) {
            g.u_.push_back(static_cast<std::int32_t>(rows[k].i));
            g.v_.push_back(static_cast<std::int32_t>(rows[k].j));
            g.w_.push_back(w);
        }
        k = k2;
    }
    if (g.w_.empty() && !allow_empty) throw std::invalid_argument("empty edge set rejected");

    g.total_weight_ = std::accumulate(g.w_.begin(), g.w_.end(), 0.0);

    UnionFind uf(n);
    for (std::size_t e = 0; e < g.w_.size(); ++e) uf.unite(g.u_[e], g.v_[e]);
    g.component_.resize(static_cast<std::size_t>(n));
    std::vector<std::int32_t> label(static_cast<std::size_t>(n), -1);
    std::int32_t next = 0;
    for (std::int64_t v = 0; v < n; ++v) {
        const std::int32_t root = uf.find(static_cast<std::int32_t>(v));
        if (label[static_cast<std::size_t>(root)] < 0) label[static_cast<std::size_t>(root)] = next++;
        g.component_[static_cast<std::size_t>(v)] = label[static_cast<std::size_t>(root)];
    }
    g.num_components_ = next;
    return g;
}

Graph Graph::load_edge_list(std::istream& in, const LoadOptions& opt) {
    std::vector<EdgeListRow> rows;
    std::string line;
    std::int64_t line_no = 0;
    bool header_pending = opt.has_header;
    const std::int64_t base = opt.one_based ? 1 : 0;

    if (opt.format == EdgeFileFormat::MatrixMarketSymmetric) {
        bool saw_sizes = false;
        std::int64_t mm_n = -1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line_no == 1 && line.rfind("%%MatrixMarket", 0) == 0) {
                if (line.find("symmetric") == std::string::npos)
                    parse_fail(line_no, "matrix-market header is not symmetric");
                continue;
            }
            if (is_blank_or_comment(line)) continue;
            auto toks = split_row(line, false);
            if (!saw_sizes) {
                if (toks.size() != 3) parse_fail(line_no, "expected 'rows cols nnz' size line");
                const std::int64_t r = parse_id(toks[0], line_no);
                const std::int64_t c = parse_id(toks[1], line_no);
                if (r != c) parse_fail(line_no, "matrix is not square");
                mm_n = r;
                saw_sizes = true;
                continue;
            }
            if (toks.size() != 2 && toks.size() != 3) parse_fail(line_no, "expected 'i j [w]'");
            EdgeListRow row;
            row.i = parse_id(toks[0], line_no) - 1;  // matrix market is 1-based
            row.j = parse_id(toks[1], line_no) - 1;
            row.w = toks.size() == 3 ? parse_weight(toks[2], line_no) : 1.0;
            if (row.i == row.j) parse_fail(line_no, "diagonal entry rejected");
            if (row.w < 0.0) parse_fail(line_no, "negative weight rejected");
            rows.push_back(row);
        }
        if (!saw_sizes) throw ParseError("matrix-market input has no size line");
        const std::int64_t n = opt.n_override >= 0 ? opt.n_override : mm_n;
        if (rows.empty()) throw ParseError("empty edge set rejected");
        return from_edges(n, std::move(rows));
    }

    const bool csv = opt.format == EdgeFileFormat::Csv;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank_or_comment(line)) continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        auto toks = split_row(line, csv);
        if (toks.size() != 2 && toks.size() != 3) parse_fail(line_no, "expected 'i j [w]'");
        EdgeListRow row;
        row.i = parse_id(toks[0], line_no) - base;
        row.j = parse_id(toks[1], line_no) - base;
        row.w = toks.size() == 3 ? parse_weight(toks[2], line_no) : 1.0;
        if (row.i < 0 || row.j < 0) parse_fail(line_no, "vertex id below index base");
        if (row.i == row.j) parse_fail(line_no, "self-loop rejected");
        if (row.w < 0.0) parse_fail(line_no, "negative weight rejected");
        rows.push_back(row);
    }
    if (rows.empty()) throw ParseError("empty edge set rejected");
    return from_edges(opt.n_override, std::move(rows));
}

Graph Graph::load_edge_list_file(const std::string& path, const LoadOptions& opt) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open graph file: " + path);
    return load_edge_list(in, opt);
}

void Graph::laplacian_matvec(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
    if (v.size() != n_) throw std::invalid_argument("laplacian_matvec: length mismatch");
    out.setZero(n_);
    for (std::size_t e = 0; e < w_.size(); ++e) {
        const auto i = u_[e], j = v_[e];
        const double d = w_[e] * (v[i] - v[j]);
        out[i] += d;
        out[j] -= d;
    }
}

Eigen::VectorXd Graph::laplacian_matvec(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out;
    laplacian_matvec(v, out);
    return out;
}

double Graph::cut_value(const CutVector& x) const {
    if (x.size() != n_) throw std::invalid_argument("cut_value: length mismatch");
    double total = 0.0;
    for (std::size_t e = 0; e < w_.size(); ++e)
        if (x.bits[static_cast<std::size_t>(u_[e])] != x.bits[static_cast<std::size_t>(v_[e])]) total += w_[e];
    return total;
}

Eigen::VectorXd Graph::degree_vector() const {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n_);
    for (std::size_t e = 0; e < w_.size(); ++e) {
        d[u_[e]] += w_[e];
        d[v_[e]] += w_[e];
    }
    return d;
}

std::pair<Graph, double> normalize_weights(const Graph& g) {
    const double scale = g.total_weight();
    if (!(scale > 0.0)) throw std::invalid_argument("normalize_weights: zero total weight");
    std::vector<EdgeListRow> rows;
    rows.reserve(static_cast<std::size_t>(g.num_edges()));
    for (std::int64_t e = 0; e < g.num_edges(); ++e)
        rows.push_back({g.edge_u()[static_cast<std::size_t>(e)], g.edge_v()[static_cast<std::size_t>(e)],
                        g.edge_w()[static_cast<std::size_t>(e)] / scale});
    return {Graph::from_edges(g.num_vertices(), std::move(rows)), scale};
}

std::vector<CutVector> load_cuts(std::istream& in, std::int64_t n) {
    std::vector<CutVector> cuts;
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank_or_comment(line)) continue;
        auto toks = split_row(line, false);
        CutVector cut;
        cut.bits.assign(static_cast<std::size_t>(n), 0);
        const bool binary_token =
            toks.size() == 1 && toks[0].find_first_not_of("01") == std::string::npos && toks[0].size() > 1;
        if (binary_token && static_cast<std::int64_t>(toks[0].size()) != n)
            throw ParseError("cuts file line " + std::to_string(line_no) + ": cut has length " +
                             std::to_string(toks[0].size()) + ", expected " + std::to_string(n));
        if (binary_token) {
            for (std::int64_t i = 0; i < n; ++i)
                cut.bits[static_cast<std::size_t>(i)] = toks[0][static_cast<std::size_t>(i)] == '1' ? 1 : 0;
        } else {
            for (const auto& t : toks) {
                const std::int64_t v = parse_id(t, line_no);
                if (v < 0 || v >= n)
                    throw ParseError("cuts file line " + std::to_string(line_no) + ": vertex " +
                                     std::to_string(v) + " out of range (n=" + std::to_string(n) + ")");
                cut.bits[static_cast<std::size_t>(v)] = 1;
            }
        }
        cuts.push_back(std::move(cut));
    }
    return cuts;
}

std::vector<CutVector> load_cuts_file(const std::string& path, std::int64_t n) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open cuts file: " + path);
    return load_cuts(in, n);
}

}  // namespace lapcert
