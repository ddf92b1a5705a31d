#pragma once

#include <Eigen/Core>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lapcert/graph.hpp"

namespace lapcert {

// Symmetric matrix-free operator. diag and assemble are optional fast paths:
// diag enables the Jacobi preconditioner, assemble the dense eigensolver
// route (which otherwise probes the operator with unit vectors).
struct LinearOperator {
    Eigen::Index dim = 0;
    std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> apply;
    Eigen::VectorXd diag;                          // empty when unknown
    std::function<void(Eigen::MatrixXd&)> assemble; // null when unknown
    bool laplacian_like = false;

    Eigen::VectorXd operator()(const Eigen::VectorXd& v) const {
        Eigen::VectorXd out(dim);
        apply(v, out);
        return out;
    }
};

struct SolverConfig {
    double tol = 1e-10;     // relative residual target for solves
    double eig_tol = 1e-6;  // relative accuracy target for eigenvalues
    int max_iter = 0;       // 0: 5n for CG, min(n, 400) for Lanczos
    bool jacobi = false;    // Jacobi preconditioning when diag is available
    std::int64_t dense_cutoff = 2048;  // dense eigensolver below this dim
};

struct SolveStats {
    int iterations = 0;
    double rel_residual = 0.0;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, int iterations, double residual)
        : std::runtime_error(what), iterations(iterations), residual(residual) {}
    int iterations;
    double residual;
};

LinearOperator graph_operator(const Graph& g);

// A - B (dims must match).
LinearOperator difference_operator(const LinearOperator& a, const LinearOperator& b);

// id_coeff * I + scale * A.
LinearOperator shifted_operator(double id_coeff, double scale, const LinearOperator& a);

LinearOperator dense_operator(const Eigen::MatrixXd& m);

// Unit-normalized indicator vectors of the connected components; the
// Laplacian nullspace used for deflation.
std::vector<Eigen::VectorXd> component_nullspace(const Graph& g);

// Conjugate gradients on a PSD operator with the given orthonormal nullspace
// deflated out: b is projected, iterates stay orthogonal to the nullspace,
// and the returned x realizes pinv(A) b when the nullspace is exact.
Eigen::VectorXd cg_solve_deflated(const LinearOperator& a, const Eigen::VectorXd& b,
                                  const std::vector<Eigen::VectorXd>& nullspace,
                                  const SolverConfig& cfg, SolveStats* stats = nullptr);

// Smallest r eigenvalues, ascending. Dense below cfg.dense_cutoff, otherwise
// shifted Lanczos with full reorthogonalization.
Eigen::VectorXd bottom_eigenvalues(const LinearOperator& a, int r, const SolverConfig& cfg);
Eigen::VectorXd bottom_eigenvalues_dense(const LinearOperator& a, int r);
Eigen::VectorXd bottom_eigenvalues_lanczos(const LinearOperator& a, int r, const SolverConfig& cfg);

// max(|lambda_min|, |lambda_max|) of a symmetric (possibly indefinite)
// operator via Lanczos run to both spectrum ends.
double operator_norm(const LinearOperator& a, const SolverConfig& cfg);

// Solves (I + tau * Lop) beta = y by CG; SPD for tau >= 0 so no deflation.
Eigen::VectorXd regression_fit(const LinearOperator& lop, const Eigen::VectorXd& y, double tau,
                               const SolverConfig& cfg, SolveStats* stats = nullptr);

}  // namespace lapcert
