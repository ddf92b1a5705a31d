#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lapcert/functionals.hpp"
#include "lapcert/graph.hpp"
#include "lapcert/rng.hpp"
#include "lapcert/sampling.hpp"

namespace lapcert {

struct BootstrapConfig {
    int b_outer = 50;
    int b_inner = 30;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    int threads = 1;
};

// Smallest member a0 of the multiset with |{a <= a0}| / |values| >= level.
// Duplicates count with multiplicity; no interpolation.
double empirical_quantile(std::span<const double> values, double level);

// Multinomial(N; base/N) collapsed onto the base categories; N = sum(base).
// Zero-base categories always receive zero.
std::vector<std::int64_t> multinomial_weights(std::span<const std::int64_t> base, RngStream& rng);

struct QuantileEstimate {
    double q_hat = 0.0;
    double mu_hat = 0.0;
    double sigma_hat = 0.0;
    double alpha = 0.05;
    int b_outer = 0;
    int b_inner = 0;
    std::uint64_t seed = 0;
    std::string functional;
};

// The studentized replicate values mu + sigma * zeta_b of the double
// bootstrap; quantiles at any level come from one replicate set.
struct Algorithm1Replicates {
    std::vector<double> values;
    double mu_hat = 0.0;
    double sigma_hat = 0.0;
};

Algorithm1Replicates algorithm1_replicates(const SparsifiedSample& sample, const FunctionalSpec& spec,
                                           const BootstrapConfig& cfg);

QuantileEstimate algorithm1_quantile(const SparsifiedSample& sample, const FunctionalSpec& spec,
                                     const BootstrapConfig& cfg);

// Per-cut moments of the per-draw values C_i(x) plus the sparse
// cut-by-unique-edge crossing table; bootstrap replicates reuse the table
// without touching the graph again.
struct CutStatistics {
    std::vector<double> c_hat;      // per cut
    std::vector<double> sigma_hat;  // per cut, population std over the N draws
    std::vector<std::int64_t> offsets;    // CSR over cuts
    std::vector<std::int32_t> crossing;   // unique-edge ids crossing each cut
};

CutStatistics cut_statistics(const SparsifiedSample& sample, const std::vector<CutVector>& cuts);

struct CutInterval {
    std::int64_t cut_id = 0;
    double c_hat = 0.0;
    double sigma_hat = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

struct CutCIResult {
    double q_hat = 0.0;
    double alpha = 0.05;
    int b_outer = 0;
    std::uint64_t seed = 0;
    std::vector<CutInterval> cuts;
    std::pair<double, double> cmax_interval{0.0, 0.0};
    std::pair<double, double> cmin_interval{0.0, 0.0};
};

// The max-statistic replicates xi*_b of Algorithm 2.
std::vector<double> algorithm2_replicates(const SparsifiedSample& sample, const CutStatistics& stats,
                                          const BootstrapConfig& cfg);

CutCIResult algorithm2_cut_cis(const SparsifiedSample& sample, const std::vector<CutVector>& cuts,
                               const BootstrapConfig& cfg);

struct EigCIResult {
    double q_hat = 0.0;
    double alpha = 0.05;
    int b_outer = 0;
    std::uint64_t seed = 0;
    std::vector<double> lambda_hat;                  // bottom r of the sample Laplacian
    std::vector<std::pair<double, double>> intervals;  // interval 1 is [0,0]; hi may be +inf
};

std::vector<double> eigenvalue_replicates(const SparsifiedSample& sample, std::span<const double> lambda_hat,
                                          const BootstrapConfig& cfg, const SolverConfig& solver);

// [lambda/(1+q), lambda/(1-q)], upper endpoint +inf once q >= 1.
std::pair<double, double> eig_interval(double lambda, double q_hat);

EigCIResult eigenvalue_cis(const SparsifiedSample& sample, int r, const BootstrapConfig& cfg,
                           const SolverConfig& solver);

// q(N) = sqrt(N0/N) q(N0); forward-only.
double extrapolate_quantile(double q0, std::int64_t n0, std::int64_t n);

// Smallest N1 >= N0 whose extrapolated quantile meets the threshold.
std::int64_t forecast_sample_size(double q0, std::int64_t n0, double threshold);

// Serialization: CSV and a line-delimited "key value" report with fixed
// field names (q_hat, mu_hat, sigma_hat, alpha, B_outer, B_inner, seed).
void write_csv(const QuantileEstimate& est, std::ostream& out);
void write_report(const QuantileEstimate& est, std::ostream& out);
void write_csv(const CutCIResult& res, std::ostream& out);
void write_report(const CutCIResult& res, std::ostream& out);
void write_csv(const EigCIResult& res, std::ostream& out);
void write_report(const EigCIResult& res, std::ostream& out);

std::string format_double(double v);  // 17 significant digits, "inf" for infinity

}  // namespace lapcert
