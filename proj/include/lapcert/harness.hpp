#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lapcert/bootstrap.hpp"
#include "lapcert/functionals.hpp"
#include "lapcert/graph.hpp"
#include "lapcert/sampling.hpp"

namespace lapcert {

// ---- synthetic graphs -----------------------------------------------------

Graph make_complete(std::int64_t n);
Graph make_path(std::int64_t n);
Graph make_erdos_renyi(std::int64_t n, double p, std::uint64_t seed);
Graph make_random_tree(std::int64_t n, std::uint64_t seed);

// Gaussian mixture in R^6 with the fixed mean layout used by the clustering
// experiments; up to 5 components. Features are rescaled to [0,1] before the
// kernel is applied, matching the experimental recipe.
Eigen::MatrixXd make_mixture_points(int components, std::int64_t points_per_component, std::uint64_t seed);
Graph make_gaussian_kernel_graph(const Eigen::MatrixXd& points, double bandwidth);

// Weighted-by-degree vertex subsample without replacement; returns the
// induced subgraph (which may be disconnected; component count is preserved
// in the Graph itself).
Graph subsample_by_degree(const Graph& g, std::int64_t k, std::uint64_t seed);

std::vector<CutVector> random_bernoulli_cuts(std::int64_t n, std::int64_t count, std::uint64_t seed);

// ---- experiment configuration ----------------------------------------------

struct ExperimentConfig {
    // graph source: er | complete | path | tree | mixture | file
    std::string graph = "er";
    std::int64_t n = 200;
    double er_p = 0.1;
    std::uint64_t graph_seed = 1;
    std::string graph_file;
    std::string graph_format = "edges";  // edges | csv | mtx
    bool one_based = false;
    bool header = false;
    std::int64_t subsample = 0;  // degree-weighted vertex subsample, 0 = off
    int mixture_components = 3;
    std::int64_t points_per_component = 150;
    double bandwidth = 0.2;

    // sampling
    std::string scheme = "ew";
    double eps = 1.0;
    double solver_tol = 1e-8;
    std::int64_t n_samples = 0;  // absolute N; 0 means use fraction
    double fraction = 0.1;

    // tasks
    std::vector<std::string> functionals;  // fro | fro2 | op | reg
    double tau = 0.01;
    std::int64_t cuts = 0;
    int eig_r = 0;
    std::vector<double> levels = {0.90, 0.95};

    // loops
    std::int64_t trials = 400;
    int b_outer = 50;
    int b_inner = 30;
    std::uint64_t seed = 1;
    int threads = 0;

    static ExperimentConfig from_stream(std::istream& in);
    static ExperimentConfig from_file(const std::string& path);
};

struct CoverageRow {
    std::string task;  // functional name, "cuts", or "eigs"
    double level = 0.0;
    double coverage = 0.0;
    double std_error = 0.0;
    std::int64_t trials = 0;
};

struct CoverageReport {
    std::vector<CoverageRow> rows;
    std::int64_t failed_trials = 0;
    double wall_time_s = 0.0;  // reported separately, kept out of the CSV
    // histogram of the argmax CI gap index (1-based j) at the first level,
    // filled when the eigenvalue task runs
    std::vector<std::int64_t> eig_gap_hist;
};

CoverageReport run_coverage_experiment(const ExperimentConfig& cfg);

// Header "task,level,coverage,std_error,trials"; deterministic for a fixed
// config and seed regardless of worker count.
void write_report_csv(const CoverageReport& report, std::ostream& out);

// ---- analytic and enumeration oracles ---------------------------------------

struct FrobeniusMeanCheck {
    double observed_mean = 0.0;
    double analytic_mean = 0.0;
    double z_score = 0.0;
};

// E ||L-hat - L||_F^2 = (4 - tr(L^2)) / N for a weight-normalized graph under
// edge-weight sampling; tr(L^2) is evaluated exactly from the edge list.
FrobeniusMeanCheck frobenius_mean_check(const Graph& g, std::int64_t n_draws, std::int64_t trials,
                                        std::uint64_t seed, int threads = 1);

double trace_l_squared(const Graph& g);

// Finite distribution with exact probabilities, sorted by value.
struct ExactDistribution {
    std::vector<double> values;
    std::vector<double> probs;

    double total_mass() const;
    double cdf(double t) const;
    double quantile(double level) const;  // smallest value with cum >= level
    double mean() const;
    double variance() const;
};

// Enumerates every counts-composition of N over the edges with its exact
// multinomial probability and evaluates psi(L-hat, L) for each.
ExactDistribution brute_force_psi_distribution(const Graph& g, const EdgeProbabilities& p,
                                               std::int64_t n_draws, const FunctionalSpec& spec,
                                               std::int64_t max_outcomes = 20000);

// Exact population analogue of the Algorithm 1 replicate distribution for a
// fixed realized sample: enumerates all (W*, W**) multinomial outcomes.
ExactDistribution brute_force_algorithm1_population(const SparsifiedSample& sample,
                                                    const FunctionalSpec& spec,
                                                    std::int64_t max_outcomes = 20000);

// ---- synthetic regression data ----------------------------------------------

struct RegressionData {
    Eigen::VectorXd y;
    Eigen::VectorXd beta0;
    double varsigma2 = 0.0;
};

// beta0 averages the unit-norm eigenvectors of the smallest min(20, n)
// Laplacian eigenvalues; y ~ N(beta0, varsigma2 I).
RegressionData synth_regression_data(const Graph& g, std::uint64_t seed);

}  // namespace lapcert
