#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lapcert/graph.hpp"
#include "lapcert/spectral.hpp"

namespace lapcert {

enum class SamplingScheme { EdgeWeight, EffectiveResistance, ApproxEffectiveResistance };

std::string scheme_name(SamplingScheme s);
SamplingScheme scheme_from_name(const std::string& name);

// Normalized sampling distribution over the graph's edges, plus provenance.
struct EdgeProbabilities {
    std::vector<double> probs;  // aligned with Graph edges, sums to 1
    SamplingScheme scheme = SamplingScheme::EdgeWeight;
    double eps = 0.0;          // AER accuracy parameter
    std::uint64_t sketch_seed = 0;  // AER sketch seed
    double tol = 0.0;          // CG tolerance used for ER/AER
};

// p(e) proportional to w(e).
EdgeProbabilities edge_weight_probs(const Graph& g);

// p(e) proportional to w(e) * R_eff(e), with R_eff from deflated CG solves.
// Uses per-edge solves when the graph has fewer edges than vertices and
// pseudoinverse-column solves otherwise (fewer systems either way).
EdgeProbabilities effective_resistance_probs(const Graph& g, double tol, int threads = 1);

// Unnormalized w(e) * R_eff(e) per edge; Sum equals n - #components.
std::vector<double> leverage_masses(const Graph& g, double tol, int threads = 1);

// Random-projection approximation with k = ceil(24 ln(n) / eps^2) sketch
// rows, each requiring one deflated CG solve.
EdgeProbabilities approx_effective_resistance_probs(const Graph& g, double eps, std::uint64_t seed,
                                                    double tol, int threads = 1);

// N i.i.d. edge draws stored as per-unique-edge counts with the
// w(e)/(N p(e)) scales; represents the sparsified Laplacian and every
// bootstrap reweighting of it.
struct SparsifiedSample {
    std::int64_t n = 0;
    std::int64_t num_draws = 0;  // N
    std::uint64_t seed = 0;
    SamplingScheme scheme = SamplingScheme::EdgeWeight;
    double eps = 0.0;
    std::uint64_t sketch_seed = 0;
    double tol = 0.0;

    std::vector<std::int64_t> edge_index;  // into the source graph, ascending
    std::vector<std::int32_t> u, v;        // endpoints, copied from the graph
    std::vector<std::int64_t> counts;      // c_e >= 1, sums to N
    std::vector<double> scale;             // s_e = w(e) / (N p(e))

    std::int64_t unique_edges() const { return static_cast<std::int64_t>(counts.size()); }
    double max_scale() const;

    // (sum_e r_e s_e Delta_e) v with r = reweight (counts when null); the one
    // kernel behind the L-hat, L-hat* and L-hat** matvecs.
    void matvec(const Eigen::VectorXd& x, Eigen::VectorXd& out,
                const std::vector<std::int64_t>* reweight = nullptr) const;

    void save(std::ostream& out) const;
    void save_file(const std::string& path) const;
    // Re-derives scales from the graph using the recorded scheme.
    static SparsifiedSample load(std::istream& in, const Graph& g, int threads = 1);
    static SparsifiedSample load_file(const std::string& path, const Graph& g, int threads = 1);
};

Eigen::VectorXd sparsified_matvec(const SparsifiedSample& s, const Eigen::VectorXd& x,
                                  const std::vector<std::int64_t>* reweight = nullptr);

// One multinomial realization of N draws; deterministic in (seed, g, p, N).
SparsifiedSample draw_sample(const Graph& g, const EdgeProbabilities& p, std::int64_t n_draws,
                             std::uint64_t seed);

// Streaming edge source delivering blocks of rows; 0 rows means exhausted.
class EdgeBlockSource {
public:
    virtual ~EdgeBlockSource() = default;
    virtual std::size_t next_block(std::vector<EdgeListRow>& out) = 0;
};

// Reads the graph-core edge-list format in fixed-size blocks.
class EdgeListFileSource final : public EdgeBlockSource {
public:
    EdgeListFileSource(const std::string& path, const LoadOptions& opt,
                       std::size_t block_rows = (1u << 22));
    ~EdgeListFileSource() override;
    std::size_t next_block(std::vector<EdgeListRow>& out) override;

private:
    struct Impl;
    Impl* impl_;
};

// Blockwise Poisson(N_target/|E|) edge-count sampling for equal-weight
// graphs; the realized total becomes the sample's N. Output is independent
// of the block partition (counts are keyed by edge ordinal).
SparsifiedSample poisson_stream_sample(EdgeBlockSource& source, std::int64_t n,
                                       std::int64_t num_edges, std::int64_t n_target,
                                       std::uint64_t seed);

// Symmetric PSD operator view of a (reweighted) sample.
LinearOperator sample_operator(const SparsifiedSample& s,
                               const std::vector<std::int64_t>* reweight = nullptr);

}  // namespace lapcert
