#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "lapcert/graph.hpp"
#include "lapcert/sampling.hpp"
#include "lapcert/spectral.hpp"

namespace lapcert {

enum class FunctionalKind { FrobeniusSq, Frobenius, OperatorNorm, RegressionL2 };

// Named error functional psi(A, B) between Laplacian operands. Frobenius is
// a square-root wrapper around the squared-Frobenius primitive, so the two
// pipelines agree exactly under the same seed.
struct FunctionalSpec {
    FunctionalKind kind = FunctionalKind::FrobeniusSq;
    Eigen::VectorXd y;   // RegressionL2 observations
    double tau = 0.0;    // RegressionL2 penalty
    SolverConfig solver; // iterative-solver settings for op-norm / regression

    static FunctionalSpec frobenius_sq() { return {FunctionalKind::FrobeniusSq, {}, 0.0, {}}; }
    static FunctionalSpec frobenius() { return {FunctionalKind::Frobenius, {}, 0.0, {}}; }
    static FunctionalSpec operator_norm(SolverConfig cfg = {}) {
        return {FunctionalKind::OperatorNorm, {}, 0.0, cfg};
    }
    static FunctionalSpec regression_l2(Eigen::VectorXd obs, double tau, SolverConfig cfg = {}) {
        FunctionalSpec s{FunctionalKind::RegressionL2, std::move(obs), tau, cfg};
        return s;
    }

    const char* name() const;
};

FunctionalKind functional_from_name(const std::string& name);

// Either the exact graph Laplacian or a (reweighted) sparsified sample.
struct LaplacianOperand {
    const Graph* graph = nullptr;
    const SparsifiedSample* sample = nullptr;
    const std::vector<std::int64_t>* reweight = nullptr;

    static LaplacianOperand exact(const Graph& g) { return {&g, nullptr, nullptr}; }
    static LaplacianOperand sampled(const SparsifiedSample& s,
                                    const std::vector<std::int64_t>* rw = nullptr) {
        return {nullptr, &s, rw};
    }
    std::int64_t dim() const;
};

// Operator view of an operand (graph Laplacian or reweighted sample).
LinearOperator operand_operator(const LaplacianOperand& op);

double eval_functional(const FunctionalSpec& spec, const LaplacianOperand& a, const LaplacianOperand& b);

// Reusable scratch for squared-Frobenius distances between operands. Both
// operands are supported on few edges, so the accumulator walks only the
// union of touched edges plus the affected diagonal entries.
class FrobeniusAccumulator {
public:
    explicit FrobeniusAccumulator(std::int64_t n);

    double diff_sq(const LaplacianOperand& a, const LaplacianOperand& b);

    // Fast path for two reweightings of the same sample (aligned index sets).
    double diff_sq_aligned(const SparsifiedSample& s, std::span<const std::int64_t> wa,
                           std::span<const std::int64_t> wb);

private:
    double finish_edges(std::span<const std::int32_t> us, std::span<const std::int32_t> vs,
                        std::span<const double> coefs);
    std::vector<double> diag_;
    std::vector<std::int32_t> touched_;
    std::vector<std::pair<std::uint64_t, double>> entries_;
};

}  // namespace lapcert
