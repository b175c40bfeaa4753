#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "opf/grid.hpp"

namespace opf {

/// Topology view of a GridCase: parallel branches collapse to a single edge.
struct GridGraph {
    int n = 0;
    std::vector<std::pair<int, int>> edges; // positional indices, i < j
    Eigen::MatrixXd adjacency;              // symmetric 0/1, zero diagonal
    Eigen::VectorXd degree;
};

inline GridGraph build_graph(const GridCase& gc) {
    GridGraph g;
    g.n = static_cast<int>(gc.n_buses());
    std::set<std::pair<int, int>> uniq;
    for (const Branch& br : gc.branches) {
        int i = gc.bus_index(br.from_bus);
        int j = gc.bus_index(br.to_bus);
        if (i > j) std::swap(i, j);
        uniq.emplace(i, j);
    }
    g.edges.assign(uniq.begin(), uniq.end());
    g.adjacency = Eigen::MatrixXd::Zero(g.n, g.n);
    for (const auto& [i, j] : g.edges) {
        g.adjacency(i, j) = 1.0;
        g.adjacency(j, i) = 1.0;
    }
    g.degree = g.adjacency.rowwise().sum();
    return g;
}

/// Electrical-coupling edge weights: 1/|x| per branch (parallel branches
/// summed), rescaled so the largest weight is 1.
inline Eigen::MatrixXd weighted_adjacency(const GridCase& gc) {
    const int n = static_cast<int>(gc.n_buses());
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (const Branch& br : gc.branches) {
        const int i = gc.bus_index(br.from_bus);
        const int j = gc.bus_index(br.to_bus);
        w(i, j) += 1.0 / std::abs(br.x);
        w(j, i) = w(i, j);
    }
    const double wmax = w.maxCoeff();
    if (wmax > 0.0) w /= wmax;
    return w;
}

/// L = I - D^(-1/2) A D^(-1/2); eigenvalues lie in [0, 2].
inline Eigen::MatrixXd normalized_laplacian(const GridGraph& g) {
    for (int i = 0; i < g.n; ++i)
        if (g.degree(i) == 0.0)
            throw ValidationError("normalized_laplacian: node " + std::to_string(i) +
                                  " is isolated (zero degree)");
    Eigen::VectorXd dinv = g.degree.array().rsqrt();
    Eigen::MatrixXd l = Eigen::MatrixXd::Identity(g.n, g.n) -
                        dinv.asDiagonal() * g.adjacency * dinv.asDiagonal();
    return l;
}

/// Largest eigenvalue by power iteration on a symmetric PSD matrix.
/// Falls back to 2.0 (the normalized-Laplacian upper bound) when the
/// iteration has not settled within max_iter.
inline double estimate_lambda_max(const Eigen::MatrixXd& m, int max_iter = 100, double tol = 1e-6) {
    const auto n = m.rows();
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) += 1e-3 * static_cast<double>(i % 7); // break symmetry
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd w = m * v;
        const double nrm = w.norm();
        if (nrm == 0.0) return 0.0;
        w /= nrm;
        const double next = w.dot(m * w);
        if (std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) return next;
        lambda = next;
        v = std::move(w);
    }
    return 2.0;
}

/// Affine spectral map onto [-1, 1]: L~ = (2/lambda_max) L - I.
inline Eigen::MatrixXd scaled_laplacian(const Eigen::MatrixXd& l, double lambda_max) {
    if (!(lambda_max > 0.0))
        throw ValidationError("scaled_laplacian: lambda_max must be positive");
    return (2.0 / lambda_max) * l - Eigen::MatrixXd::Identity(l.rows(), l.cols());
}

} // namespace opf
