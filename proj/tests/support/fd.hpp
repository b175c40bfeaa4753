#pragma once

// Central finite differences for gradient/Jacobian/Hessian verification.

#include <Eigen/Dense>
#include <functional>

namespace opf::testing {

inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& z, double h = 1e-6) {
    Eigen::VectorXd g(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        Eigen::VectorXd zp = z, zm = z;
        zp(i) += h;
        zm(i) -= h;
        g(i) = (f(zp) - f(zm)) / (2.0 * h);
    }
    return g;
}

inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& z, double h = 1e-6) {
    const Eigen::VectorXd f0 = f(z);
    Eigen::MatrixXd j(f0.size(), z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        Eigen::VectorXd zp = z, zm = z;
        zp(i) += h;
        zm(i) -= h;
        j.col(i) = (f(zp) - f(zm)) / (2.0 * h);
    }
    return j;
}

/// Hessian of a scalar function via second-order central differences of the
/// gradient function (when an analytic gradient is available).
inline Eigen::MatrixXd fd_hessian_from_gradient(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad, const Eigen::VectorXd& z,
    double h = 1e-6) {
    Eigen::MatrixXd hm = fd_jacobian(grad, z, h);
    return 0.5 * (hm + hm.transpose());
}

inline double rel_err(double a, double b, double floor = 1e-8) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double max_rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double floor = 1e-4) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            const double d = std::abs(a(i, j) - b(i, j)) /
                             std::max({std::abs(a(i, j)), std::abs(b(i, j)), floor});
            worst = std::max(worst, d);
        }
    return worst;
}

} // namespace opf::testing
