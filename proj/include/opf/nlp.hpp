#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace opf {

/// Smooth NLP in the form
///   min f(z)  s.t.  c_E(z) = 0,  c_I(z) >= 0.
/// Variable bounds, when a problem has them, are expressed as rows of c_I so
/// the solver has a single inequality mechanism.
struct NLPProblem {
    int n = 0;
    int m_e = 0;
    int m_i = 0;

    std::function<double(const Eigen::VectorXd&)> objective;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eq_residuals;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> eq_jacobian;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> ineq_values;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> ineq_jacobian;
    /// W(z, lambda, nu) = grad^2 f - sum_i lambda_i grad^2 cE_i - sum_j nu_j grad^2 cI_j
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&,
                                  const Eigen::VectorXd&)>
        lagrangian_hessian;
};

enum class SolveStatus { optimal, infeasible, iteration_limit, numerical_failure };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::iteration_limit: return "iteration_limit";
        case SolveStatus::numerical_failure: return "numerical_failure";
    }
    return "?";
}

struct SolveOptions {
    double tol = 1e-6;
    int max_iter = 300;
    double mu0 = 0.1;           // initial barrier parameter
    double mu_shrink = 0.2;     // monotone reduction factor
    double mu_kappa = 10.0;     // reduce mu when barrier KKT residual < kappa * mu
    double ftb_tau = 0.995;     // fraction-to-the-boundary
    double slack_min = 1e-4;    // strict-interior clipping for initial slacks
    /// optional per-iteration observer: (iter, mu, err_mu, err_0, alpha)
    std::function<void(int, double, double, double, double)> trace;
};

struct KktResiduals {
    double stationarity = 0.0;
    double primal_feasibility = 0.0;
    double dual_feasibility = 0.0;
    double complementarity = 0.0;

    double max() const {
        return std::max(std::max(stationarity, primal_feasibility),
                        std::max(dual_feasibility, complementarity));
    }
};

struct SolveResult {
    SolveStatus status = SolveStatus::numerical_failure;
    Eigen::VectorXd z;        // primal point
    Eigen::VectorXd lambda;   // equality duals
    Eigen::VectorXd nu;       // inequality duals (>= 0)
    Eigen::VectorXd slack;    // inequality slacks
    double objective = 0.0;   // unscaled objective at z
    int iterations = 0;
    double wall_time = 0.0;   // seconds, solve call only
    double kkt_residual = 0.0;
    std::vector<std::uint8_t> binding; // over the solved inequality set
    int warm_clip_count = 0;  // warm-start components clipped into bounds
};

} // namespace opf
