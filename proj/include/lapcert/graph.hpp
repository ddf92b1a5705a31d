#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lapcert {

// Malformed or unreadable user input (graph/cuts/sample/config files).
// Distinct from computation failures so the CLI can map exit codes.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One parsed input row before validation/merging.
struct EdgeListRow {
    std::int64_t i = 0;
    std::int64_t j = 0;
    double w = 1.0;
};

enum class EdgeFileFormat {
    WhitespaceEdgeList,    // "i j [w]" per line
    Csv,                   // "i,j[,w]" per line
    MatrixMarketSymmetric  // coordinate symmetric, one triangle
};

struct LoadOptions {
    EdgeFileFormat format = EdgeFileFormat::WhitespaceEdgeList;
    bool one_based = false;
    bool has_header = false;      // skip first non-comment data line
    std::int64_t n_override = -1; // infer 1 + max id when negative
};

// Binary vertex labelling identifying a cut.
struct CutVector {
    std::vector<std::uint8_t> bits;

    std::int64_t size() const { return static_cast<std::int64_t>(bits.size()); }
    bool side(std::int64_t v) const { return bits[static_cast<std::size_t>(v)] != 0; }
    CutVector complement() const;
};

// Immutable weighted undirected graph. Construction merges duplicate
// unordered pairs by weight addition, drops zero-weight edges, rejects
// self-loops and negative weights, and labels connected components.
// Laplacian action is matrix-free throughout.
class Graph {
public:
    // n < 0 infers the vertex count as 1 + max id. allow_empty permits an
    // edgeless graph (useful as the zero operand); file loaders never do.
    static Graph from_edges(std::int64_t n, std::vector<EdgeListRow> rows, bool allow_empty = false);

    static Graph load_edge_list(std::istream& in, const LoadOptions& opt);
    static Graph load_edge_list_file(const std::string& path, const LoadOptions& opt);

    std::int64_t num_vertices() const { return n_; }
    std::int64_t num_edges() const { return static_cast<std::int64_t>(w_.size()); }
    double total_weight() const { return total_weight_; }

    std::span<const std::int32_t> edge_u() const { return u_; }
    std::span<const std::int32_t> edge_v() const { return v_; }
    std::span<const double> edge_w() const { return w_; }

    const std::vector<std::int32_t>& component_ids() const { return component_; }
    std::int32_t num_components() const { return num_components_; }

    void laplacian_matvec(const Eigen::VectorXd& v, Eigen::VectorXd& out) const;
    Eigen::VectorXd laplacian_matvec(const Eigen::VectorXd& v) const;

    double cut_value(const CutVector& x) const;
    Eigen::VectorXd degree_vector() const;

private:
    Graph() = default;

    std::int64_t n_ = 0;
    std::vector<std::int32_t> u_, v_;
    std::vector<double> w_;
    double total_weight_ = 0.0;
    std::vector<std::int32_t> component_;
    std::int32_t num_components_ = 0;
};

// Rescales weights to total 1; returns the divisor so error estimates can be
// mapped back to the original scale.
std::pair<Graph, double> normalize_weights(const Graph& g);

// Cuts file: one cut per line, either a dense 0/1 string of length n or a
// whitespace-separated list of vertex ids on the 1 side. Blank lines and
// '#' comments are skipped.
std::vector<CutVector> load_cuts(std::istream& in, std::int64_t n);
std::vector<CutVector> load_cuts_file(const std::string& path, std::int64_t n);

}  // namespace lapcert
