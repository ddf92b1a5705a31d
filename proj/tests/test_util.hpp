#pragma once

#include <Eigen/Dense>
#include <sstream>

#include "lapcert/graph.hpp"
#include "lapcert/sampling.hpp"

namespace lapcert::test {

inline Graph triangle() {
    return Graph::from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}});
}

inline Graph path3() {
    return Graph::from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}});
}

inline Graph single_edge(double w = 1.0) {
    return Graph::from_edges(2, {{0, 1, w}});
}

// 4 nodes, two disjoint edges of weight 1/2 each (total weight 1)
inline Graph two_half_edges() {
    return Graph::from_edges(4, {{0, 1, 0.5}, {2, 3, 0.5}});
}

inline Eigen::MatrixXd dense_laplacian(const Graph& g) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(g.num_vertices(), g.num_vertices());
    for (std::int64_t e = 0; e < g.num_edges(); ++e) {
        const auto i = g.edge_u()[static_cast<std::size_t>(e)];
        const auto j = g.edge_v()[static_cast<std::size_t>(e)];
        const double w = g.edge_w()[static_cast<std::size_t>(e)];
        m(i, i) += w;
        m(j, j) += w;
        m(i, j) -= w;
        m(j, i) -= w;
    }
    return m;
}

inline Eigen::MatrixXd dense_sample_laplacian(const SparsifiedSample& s,
                                              const std::vector<std::int64_t>* reweight = nullptr) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(s.n, s.n);
    for (std::size_t e = 0; e < s.counts.size(); ++e) {
        const double r = reweight ? static_cast<double>((*reweight)[e]) : static_cast<double>(s.counts[e]);
        const double coef = r * s.scale[e];
        m(s.u[e], s.u[e]) += coef;
        m(s.v[e], s.v[e]) += coef;
        m(s.u[e], s.v[e]) -= coef;
        m(s.v[e], s.u[e]) -= coef;
    }
    return m;
}

// Moore-Penrose pseudoinverse through the symmetric eigendecomposition.
inline Eigen::MatrixXd dense_pinv(const Eigen::MatrixXd& m, double tol = 1e-10) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const Eigen::VectorXd& lam = es.eigenvalues();
    const double cutoff = tol * std::max(1.0, std::abs(lam[lam.size() - 1]));
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        if (std::abs(lam[i]) > cutoff) inv[i] = 1.0 / lam[i];
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace lapcert::test
