#include "lapcert/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "lapcert/rng.hpp"

namespace lapcert {

namespace {

void project_out(Eigen::VectorXd& v, const std::vector<Eigen::VectorXd>& basis) {
    for (const auto& q : basis) v -= (q.dot(v)) * q;
}

int lanczos_cap(const SolverConfig& cfg, Eigen::Index n) {
    if (cfg.max_iter > 0) return cfg.max_iter;
    return static_cast<int>(std::min<Eigen::Index>(n, 400));
}

int cg_cap(const SolverConfig& cfg, Eigen::Index n) {
    if (cfg.max_iter > 0) return cfg.max_iter;
    return static_cast<int>(5 * n);
}

// Deterministic pseudo-random start vector; keyed on dim only, so repeated
// runs see the same Krylov spaces regardless of call order.
Eigen::VectorXd start_vector(Eigen::Index n, std::uint64_t salt) {
    RngStream rng(stream_key(0x6c61706365727421ULL, "krylov", static_cast<std::uint64_t>(n) ^ salt));
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
    const double nrm = v.norm();
    if (nrm > 0) v /= nrm;
    return v;
}

// Power iteration estimate of the spectral radius, used for shifts and
// relative tolerances.
double norm_estimate(const LinearOperator& a, int iters = 60) {
    if (a.dim == 0) return 0.0;
    Eigen::VectorXd v = start_vector(a.dim, 0x9e37);
    Eigen::VectorXd av(a.dim);
    double lambda = 0.0;
    for (int k = 0; k < iters; ++k) {
        a.apply(v, av);
        const double nrm = av.norm();
        if (nrm == 0.0) return 0.0;
        const double next = std::abs(v.dot(av));
        v = av / nrm;
        if (k > 4 && std::abs(next - lambda) <= 1e-3 * std::abs(next)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return lambda;
}

struct LanczosResult {
    Eigen::VectorXd ritz;        // ascending eigenvalues of T_k
    Eigen::MatrixXd ritz_vecs;   // eigenvectors of T_k (k x k)
    double beta_last = 0.0;      // residual scale
    int steps = 0;
    bool exhausted = false;      // Krylov space spanned the invariant subspace
};

// Symmetric Lanczos with full reorthogonalization. Runs until `converged`
// says stop (checked every `check_every` steps) or the cap is hit.
LanczosResult lanczos(const LinearOperator& a, int cap,
                      const std::function<bool(const LanczosResult&)>& converged) {
    const Eigen::Index n = a.dim;
    cap = static_cast<int>(std::min<Eigen::Index>(cap, n));
    std::vector<Eigen::VectorXd> basis;
    basis.reserve(static_cast<std::size_t>(cap));
    std::vector<double> alpha, beta;  // beta[k] links q_k and q_{k+1}

    Eigen::VectorXd q = start_vector(n, 0);
    Eigen::VectorXd aq(n);
    LanczosResult res;

    for (int k = 0; k < cap; ++k) {
        basis.push_back(q);
        a.apply(q, aq);
        const double al = q.dot(aq);
        alpha.push_back(al);
        aq -= al * q;
        if (k > 0) aq -= beta[static_cast<std::size_t>(k - 1)] * basis[static_cast<std::size_t>(k - 1)];
        // full reorthogonalization, twice for clustered spectra
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis) aq -= (b.dot(aq)) * b;
        const double bt = aq.norm();

        const int steps = k + 1;
        const bool final_step = (bt <= 1e-300) || (steps == cap);
        const bool check_now = final_step || (steps >= 2 && steps % 4 == 0);
        if (check_now) {
            Eigen::MatrixXd t = Eigen::MatrixXd::Zero(steps, steps);
            for (int i = 0; i < steps; ++i) {
                t(i, i) = alpha[static_cast<std::size_t>(i)];
                if (i + 1 < steps) {
                    t(i, i + 1) = beta[static_cast<std::size_t>(i)];
                    t(i + 1, i) = beta[static_cast<std::size_t>(i)];
                }
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
            res.ritz = es.eigenvalues();
            res.ritz_vecs = es.eigenvectors();
            res.beta_last = bt;
            res.steps = steps;
            res.exhausted = bt <= 1e-300 || steps == n;
            if (res.exhausted || converged(res)) return res;
            if (final_step) return res;
        }
        beta.push_back(bt);
        q = aq / bt;
    }
    return res;
}

// Ritz residual bound |beta_k * s_{k,i}| for tridiagonal eigenpair i.
double ritz_residual(const LanczosResult& r, int i) {
    return std::abs(r.beta_last * r.ritz_vecs(r.steps - 1, i));
}

}  // namespace

LinearOperator graph_operator(const Graph& g) {
    LinearOperator op;
    op.dim = g.num_vertices();
    op.apply = [&g](const Eigen::VectorXd& v, Eigen::VectorXd& out) { g.laplacian_matvec(v, out); };
    op.diag = g.degree_vector();
    op.assemble = [&g](Eigen::MatrixXd& m) {
        m.setZero(g.num_vertices(), g.num_vertices());
        auto u = g.edge_u();
        auto v = g.edge_v();
        auto w = g.edge_w();
        for (std::size_t e = 0; e < w.size(); ++e) {
            m(u[e], u[e]) += w[e];
            m(v[e], v[e]) += w[e];
            m(u[e], v[e]) -= w[e];
            m(v[e], u[e]) -= w[e];
        }
    };
    op.laplacian_like = true;
    return op;
}

LinearOperator difference_operator(const LinearOperator& a, const LinearOperator& b) {
    if (a.dim != b.dim) throw std::invalid_argument("difference_operator: dimension mismatch");
    LinearOperator op;
    op.dim = a.dim;
    op.apply = [a, b](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
        Eigen::VectorXd tmp(v.size());
        a.apply(v, out);
        b.apply(v, tmp);
        out -= tmp;
    };
    if (a.diag.size() && b.diag.size()) op.diag = a.diag - b.diag;
    if (a.assemble && b.assemble) {
        auto aa = a.assemble;
        auto ba = b.assemble;
        op.assemble = [aa, ba](Eigen::MatrixXd& m) {
            Eigen::MatrixXd tmp;
            aa(m);
            ba(tmp);
            m -= tmp;
        };
    }
    return op;
}

LinearOperator shifted_operator(double id_coeff, double scale, const LinearOperator& a) {
    LinearOperator op;
    op.dim = a.dim;
    op.apply = [id_coeff, scale, a](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
        a.apply(v, out);
        out = id_coeff * v + scale * out;
    };
    if (a.diag.size()) op.diag = Eigen::VectorXd::Constant(a.dim, id_coeff) + scale * a.diag;
    if (a.assemble) {
        auto aa = a.assemble;
        const Eigen::Index n = a.dim;
        op.assemble = [aa, id_coeff, scale, n](Eigen::MatrixXd& m) {
            aa(m);
            m *= scale;
            m += id_coeff * Eigen::MatrixXd::Identity(n, n);
        };
    }
    return op;
}

LinearOperator dense_operator(const Eigen::MatrixXd& m) {
    LinearOperator op;
    op.dim = m.rows();
    op.apply = [m](const Eigen::VectorXd& v, Eigen::VectorXd& out) { out = m * v; };
    op.diag = m.diagonal();
    op.assemble = [m](Eigen::MatrixXd& out) { out = m; };
    return op;
}

std::vector<Eigen::VectorXd> component_nullspace(const Graph& g) {
    const std::int64_t n = g.num_vertices();
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(g.num_components()), 0);
    for (std::int64_t v = 0; v < n; ++v) ++sizes[static_cast<std::size_t>(g.component_ids()[static_cast<std::size_t>(v)])];
    std::vector<Eigen::VectorXd> basis(sizes.size(), Eigen::VectorXd::Zero(n));
    for (std::int64_t v = 0; v < n; ++v) {
        const auto c = static_cast<std::size_t>(g.component_ids()[static_cast<std::size_t>(v)]);
        basis[c][v] = 1.0 / std::sqrt(static_cast<double>(sizes[c]));
    }
    return basis;
}

Eigen::VectorXd cg_solve_deflated(const LinearOperator& a, const Eigen::VectorXd& b,
                                  const std::vector<Eigen::VectorXd>& nullspace,
                                  const SolverConfig& cfg, SolveStats* stats) {
    if (b.size() != a.dim) throw std::invalid_argument("cg_solve_deflated: length mismatch");
    const Eigen::Index n = a.dim;
    Eigen::VectorXd rhs = b;
    project_out(rhs, nullspace);

    // a rhs that projects to rounding noise has the zero solution
    const double bnorm = rhs.norm();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    if (bnorm <= 1e-14 * b.norm() || bnorm == 0.0) {
        if (stats) *stats = {0, 0.0};
        return x;
    }

    const bool precond = cfg.jacobi && a.diag.size() == n;
    Eigen::VectorXd inv_diag;
    if (precond) {
        inv_diag.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) inv_diag[i] = a.diag[i] > 0.0 ? 1.0 / a.diag[i] : 1.0;
    }

    Eigen::VectorXd r = rhs;
    Eigen::VectorXd z = precond ? inv_diag.cwiseProduct(r).eval() : r;
    project_out(z, nullspace);
    Eigen::VectorXd p = z;
    Eigen::VectorXd ap(n);
    double rz = r.dot(z);

    const int cap = cg_cap(cfg, n);
    for (int it = 1; it <= cap; ++it) {
        a.apply(p, ap);
        const double pap = p.dot(ap);
        if (pap <= 0.0) {
            // numerically singular direction; the deflated system should be PD
            throw SolverError("cg_solve_deflated: non-positive curvature encountered", it, r.norm() / bnorm);
        }
        const double step = rz / pap;
        x += step * p;
        r -= step * ap;
        project_out(r, nullspace);
        const double rel = r.norm() / bnorm;
        if (rel <= cfg.tol) {
            project_out(x, nullspace);
            if (stats) *stats = {it, rel};
            return x;
        }
        z = precond ? inv_diag.cwiseProduct(r).eval() : r;
        project_out(z, nullspace);
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    throw SolverError("cg_solve_deflated: no convergence in " + std::to_string(cap) + " iterations (residual " +
                          std::to_string(r.norm() / bnorm) + ")",
                      cap, r.norm() / bnorm);
}

Eigen::VectorXd bottom_eigenvalues_dense(const LinearOperator& a, int r) {
    const Eigen::Index n = a.dim;
    Eigen::MatrixXd m;
    if (a.assemble) {
        a.assemble(m);
    } else {
        m.resize(n, n);
        Eigen::VectorXd unit = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd col(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            unit[i] = 1.0;
            a.apply(unit, col);
            m.col(i) = col;
            unit[i] = 0.0;
        }
        m = 0.5 * (m + m.transpose()).eval();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().head(r);
}

Eigen::VectorXd bottom_eigenvalues_lanczos(const LinearOperator& a, int r, const SolverConfig& cfg) {
    const Eigen::Index n = a.dim;
    const double anorm = norm_estimate(a);
    if (anorm == 0.0) return Eigen::VectorXd::Zero(r);
    // Bottom of A = shift - top of (shift*I - A); the shifted operator is PSD.
    const double shift = 1.01 * anorm;
    LinearOperator flipped = shifted_operator(shift, -1.0, a);
    const double tol = cfg.eig_tol * anorm;
    auto converged = [&](const LanczosResult& res) {
        if (res.steps < r) return false;
        for (int i = 0; i < r; ++i) {
            const int idx = res.steps - 1 - i;  // top of the flipped spectrum
            if (ritz_residual(res, idx) > tol) return false;
        }
        return true;
    };
    LanczosResult res = lanczos(flipped, lanczos_cap(cfg, n), converged);
    if (res.steps < r)
        throw SolverError("bottom_eigenvalues: Krylov space too small (" + std::to_string(res.steps) + " < " +
                              std::to_string(r) + ")",
                          res.steps, res.beta_last);
    if (!res.exhausted && !converged(res))
        throw SolverError("bottom_eigenvalues: no convergence (residual " +
                              std::to_string(ritz_residual(res, res.steps - 1)) + ", target " + std::to_string(tol) + ")",
                          res.steps, ritz_residual(res, res.steps - 1));
    Eigen::VectorXd out(r);
    for (int i = 0; i < r; ++i) out[i] = shift - res.ritz[res.steps - 1 - i];
    return out;
}

Eigen::VectorXd bottom_eigenvalues(const LinearOperator& a, int r, const SolverConfig& cfg) {
    if (r < 1 || r > a.dim) throw std::invalid_argument("bottom_eigenvalues: r out of range");
    if (a.dim <= cfg.dense_cutoff) return bottom_eigenvalues_dense(a, r);
    return bottom_eigenvalues_lanczos(a, r, cfg);
}

double operator_norm(const LinearOperator& a, const SolverConfig& cfg) {
    const Eigen::Index n = a.dim;
    if (n == 0) return 0.0;
    if (n == 1) {
        Eigen::VectorXd e = Eigen::VectorXd::Ones(1), out(1);
        a.apply(e, out);
        return std::abs(out[0]);
    }
    const double anorm = norm_estimate(a);
    if (anorm == 0.0) return 0.0;
    const double tol = cfg.eig_tol * anorm;
    // All Ritz values lie inside [lambda_min, lambda_max], so max|theta| is a
    // lower bound; the Ritz residuals give the matching upper bound.
    auto gap = [](const LanczosResult& res) {
        const double lo = std::abs(res.ritz[0]);
        const double hi = std::abs(res.ritz[res.steps - 1]);
        const double rlo = ritz_residual(res, 0);
        const double rhi = ritz_residual(res, res.steps - 1);
        return std::max(lo + rlo, hi + rhi) - std::max(lo, hi);
    };
    auto converged = [&](const LanczosResult& res) { return res.steps >= 2 && gap(res) <= tol; };
    LanczosResult res = lanczos(a, lanczos_cap(cfg, n), converged);
    if (res.steps == 0) return 0.0;
    if (!res.exhausted && !converged(res))
        throw SolverError("operator_norm: no convergence after " + std::to_string(res.steps) + " steps",
                          res.steps, gap(res));
    return std::max(std::abs(res.ritz[0]), std::abs(res.ritz[res.steps - 1]));
}

Eigen::VectorXd regression_fit(const LinearOperator& lop, const Eigen::VectorXd& y, double tau,
                               const SolverConfig& cfg, SolveStats* stats) {
    if (tau < 0.0) throw std::invalid_argument("regression_fit: tau must be >= 0");
    if (y.size() != lop.dim) throw std::invalid_argument("regression_fit: length mismatch");
    if (tau == 0.0) {
        if (stats) *stats = {0, 0.0};
        return y;
    }
    LinearOperator system = shifted_operator(1.0, tau, lop);
    Eigen::VectorXd beta = cg_solve_deflated(system, y, {}, cfg, stats);
    // normal-equation residual check from the operation contract
    Eigen::VectorXd resid(lop.dim);
    system.apply(beta, resid);
    resid -= y;
    const double rel = y.norm() > 0 ? resid.norm() / y.norm() : resid.norm();
    if (rel > 10.0 * cfg.tol)
        throw SolverError("regression_fit: residual bound violated", stats ? stats->iterations : 0, rel);
    return beta;
}

}  // namespace lapcert
