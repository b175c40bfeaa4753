#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "opf/nlp.hpp"

namespace opf {

/// Primal-dual interior-point method: slacks on every inequality, log
/// barrier, damped Newton steps on the perturbed KKT system, monotone
/// Fiacco-McCormick barrier reduction and a fraction-to-the-boundary rule.
/// Deterministic: identical inputs give identical iterates.
namespace ipm {

namespace detail {

struct Eval {
    double f = 0.0;
    Eigen::VectorXd grad, ce, ci;
    Eigen::MatrixXd je, ji;
    bool finite = true;
};

inline bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

inline Eval evaluate(const NLPProblem& p, const Eigen::VectorXd& z) {
    Eval e;
    e.f = p.objective(z);
    e.grad = p.gradient(z);
    e.ce = p.m_e > 0 ? p.eq_residuals(z) : Eigen::VectorXd::Zero(0);
    e.je = p.m_e > 0 ? p.eq_jacobian(z) : Eigen::MatrixXd::Zero(0, p.n);
    e.ci = p.m_i > 0 ? p.ineq_values(z) : Eigen::VectorXd::Zero(0);
    e.ji = p.m_i > 0 ? p.ineq_jacobian(z) : Eigen::MatrixXd::Zero(0, p.n);
    e.finite = std::isfinite(e.f) && e.grad.allFinite() && e.ce.allFinite() && e.je.allFinite() &&
               e.ci.allFinite() && e.ji.allFinite();
    return e;
}

struct Residuals {
    Eigen::VectorXd dual;  // grad f - Je^T lambda - Ji^T nu
    Eigen::VectorXd eq;    // c_E
    Eigen::VectorXd ineq;  // c_I - s
    Eigen::VectorXd comp;  // s .* nu - mu
};

inline Residuals residuals(const Eval& e, const Eigen::VectorXd& s, const Eigen::VectorXd& lambda,
                           const Eigen::VectorXd& nu, double mu) {
    Residuals r;
    r.dual = e.grad;
    if (lambda.size() > 0) r.dual -= e.je.transpose() * lambda;
    if (nu.size() > 0) r.dual -= e.ji.transpose() * nu;
    r.eq = e.ce;
    r.ineq = e.ci - s;
    r.comp = (s.array() * nu.array() - mu).matrix();
    return r;
}

inline double inf_norm(const Eigen::VectorXd& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

inline double error_norm(const Residuals& r) {
    return std::max(std::max(inf_norm(r.dual), inf_norm(r.eq)),
                    std::max(inf_norm(r.ineq), inf_norm(r.comp)));
}

inline double merit(const Residuals& r) {
    return std::sqrt(r.dual.squaredNorm() + r.eq.squaredNorm() + r.ineq.squaredNorm() +
                     r.comp.squaredNorm());
}

} // namespace detail

/// Solve starting from primal point z0; duals start at 1, slacks at
/// max(c_I(z0), slack_min).
inline SolveResult solve(const NLPProblem& p, const Eigen::VectorXd& z0, const SolveOptions& opts) {
    using namespace detail;
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    auto finish = [&](SolveResult& r) {
        r.wall_time = std::chrono::duration<double>(clock::now() - t0).count();
        return r;
    };

    SolveResult res;
    res.z = z0;
    res.lambda = Eigen::VectorXd::Ones(p.m_e);
    res.nu = Eigen::VectorXd::Ones(p.m_i);

    Eval ev = evaluate(p, z0);
    if (!ev.finite) {
        res.status = SolveStatus::numerical_failure;
        return finish(res);
    }
    Eigen::VectorXd s = ev.ci.cwiseMax(opts.slack_min);
    Eigen::VectorXd z = z0;
    Eigen::VectorXd lambda = res.lambda, nu = res.nu;

    const int n = p.n, me = p.m_e, mi = p.m_i;
    const double mu_min = opts.tol / 20.0;
    // opts.mu0 caps the barrier. A start whose low-quantile complementarity
    // products are already small (a warm start pinning part of the active
    // set) enters the schedule there instead of being dragged out to the mu0
    // central path and back. Identical states map to identical mu.
    double mu = opts.mu0;
    if (mi > 0) {
        const double closest = s.cwiseProduct(nu).minCoeff();
        mu = std::min(opts.mu0, std::max(closest, 10.0 * mu_min));
    }

    SolveStatus status = SolveStatus::iteration_limit;
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        Residuals r0 = residuals(ev, s, lambda, nu, 0.0);
        const double err0 = error_norm(r0);
        if (err0 <= opts.tol) {
            status = SolveStatus::optimal;
            break;
        }

        // monotone barrier reduction, cascading while the mu-system is solved
        Residuals rmu = residuals(ev, s, lambda, nu, mu);
        while (error_norm(rmu) <= opts.mu_kappa * mu && mu > mu_min) {
            mu = std::max(mu * opts.mu_shrink, mu_min);
            rmu.comp = (s.array() * nu.array() - mu).matrix();
        }

        // condensed KKT system in (dz, -dlambda)
        const Eigen::VectorXd sigma = nu.cwiseQuotient(s);
        Eigen::MatrixXd w = p.lagrangian_hessian(z, lambda, nu);
        if (!w.allFinite()) {
            status = SolveStatus::numerical_failure;
            break;
        }
        Eigen::MatrixXd htilde = w;
        if (mi > 0) htilde += ev.ji.transpose() * sigma.asDiagonal() * ev.ji;

        Eigen::VectorXd rhs1 = -rmu.dual;
        if (mi > 0) {
            const Eigen::VectorXd t =
                (mu * s.cwiseInverse() - nu) - sigma.cwiseProduct(rmu.ineq);
            rhs1 += ev.ji.transpose() * t;
        }

        // null-space basis of J_E for the inertia test: descent requires
        // Z^T (H~ + delta I) Z to be positive definite
        Eigen::MatrixXd nullz;
        if (me > 0) {
            const Eigen::HouseholderQR<Eigen::MatrixXd> qr(ev.je.transpose());
            const Eigen::MatrixXd q = qr.householderQ();
            nullz = q.rightCols(n - me);
        } else {
            nullz = Eigen::MatrixXd::Identity(n, n);
        }
        const Eigen::MatrixXd hz = nullz.transpose() * htilde * nullz;
        const double hscale = std::max(1.0, htilde.cwiseAbs().maxCoeff());

        const int dim = n + me;
        Eigen::VectorXd step;
        bool solved = false;
        for (double delta = 0.0; delta <= 1.01 * hscale;
             delta = delta == 0.0 ? 1e-8 * hscale : delta * 10.0) {
            if (hz.rows() > 0) {
                Eigen::MatrixXd shifted = hz;
                shifted.diagonal().array() += delta;
                const Eigen::LLT<Eigen::MatrixXd> llt(shifted);
                if (llt.info() != Eigen::Success) continue; // wrong inertia
            }
            Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim, dim);
            kkt.topLeftCorner(n, n) = htilde + delta * Eigen::MatrixXd::Identity(n, n);
            if (me > 0) {
                kkt.topRightCorner(n, me) = ev.je.transpose();
                kkt.bottomLeftCorner(me, n) = ev.je;
                kkt.bottomRightCorner(me, me) = -(delta * 1e-10 + 1e-14) *
                                                Eigen::MatrixXd::Identity(me, me);
            }
            Eigen::VectorXd rhs(dim);
            rhs.head(n) = rhs1;
            if (me > 0) rhs.tail(me) = -rmu.eq;
            const Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
            step = lu.solve(rhs);
            if (step.allFinite() && (kkt * step - rhs).cwiseAbs().maxCoeff() <=
                                        1e-8 * std::max(1.0, rhs.cwiseAbs().maxCoeff())) {
                solved = true;
                break;
            }
        }
        if (!solved) {
            status = SolveStatus::numerical_failure;
            break;
        }

        const Eigen::VectorXd dz = step.head(n);
        const Eigen::VectorXd dlambda = me > 0 ? Eigen::VectorXd(-step.tail(me))
                                               : Eigen::VectorXd::Zero(0);
        Eigen::VectorXd ds = Eigen::VectorXd::Zero(mi), dnu = Eigen::VectorXd::Zero(mi);
        if (mi > 0) {
            ds = ev.ji * dz + rmu.ineq;
            dnu = (mu * s.cwiseInverse() - nu) - sigma.cwiseProduct(ds);
        }

        // fraction-to-the-boundary, separately for primal slacks and duals
        double alpha_p_max = 1.0, alpha_d = 1.0;
        for (int i = 0; i < mi; ++i) {
            if (ds(i) < 0.0) alpha_p_max = std::min(alpha_p_max, -opts.ftb_tau * s(i) / ds(i));
            if (dnu(i) < 0.0) alpha_d = std::min(alpha_d, -opts.ftb_tau * nu(i) / dnu(i));
        }

        // inequality duals take their fraction-to-the-boundary step; the
        // primal variables, slacks and equality duals backtrack together on
        // the residual norm
        const Eigen::VectorXd nt = nu + alpha_d * dnu;
        const double m0 = merit(rmu);
        double alpha = alpha_p_max;
        Eval trial_ev;
        bool accepted = false;
        for (int bt = 0; bt < 30; ++bt) {
            const Eigen::VectorXd zt = z + alpha * dz;
            trial_ev = evaluate(p, zt);
            if (trial_ev.finite) {
                const Eigen::VectorXd st = s + alpha * ds;
                const Eigen::VectorXd lt = lambda + alpha * dlambda;
                const double mt = merit(residuals(trial_ev, st, lt, nt, mu));
                if (mt <= (1.0 - 1e-4 * alpha) * m0 || mt <= opts.tol) {
                    z = zt;
                    s = st;
                    lambda = lt;
                    nu = nt;
                    ev = trial_ev;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            // take the (tiny) damped step anyway; regularization grows next round
            const Eigen::VectorXd zt = z + alpha * dz;
            trial_ev = evaluate(p, zt);
            if (!trial_ev.finite) {
                status = SolveStatus::numerical_failure;
                break;
            }
            z = zt;
            s += alpha * ds;
            lambda += alpha * dlambda;
            nu = nt;
            ev = trial_ev;
        }
        if (opts.trace)
            opts.trace(it, mu, error_norm(residuals(ev, s, lambda, nu, mu)),
                       error_norm(residuals(ev, s, lambda, nu, 0.0)), alpha);
    }

    res.z = z;
    res.lambda = lambda;
    res.nu = nu;
    res.slack = s;
    res.iterations = it;
    res.objective = ev.f;
    const Residuals rf = residuals(ev, s, lambda, nu, 0.0);
    res.kkt_residual = error_norm(rf);
    if (status == SolveStatus::iteration_limit) {
        const double feas = std::max(inf_norm(rf.eq), mi > 0 ? std::max(0.0, -ev.ci.minCoeff()) : 0.0);
        if (feas > 1e-4) status = SolveStatus::infeasible;
    }
    res.status = status;
    res.binding.assign(static_cast<std::size_t>(mi), 0);
    for (int i = 0; i < mi; ++i) res.binding[static_cast<std::size_t>(i)] = ev.ci(i) <= 1e-5;
    return finish(res);
}

/// The four KKT blocks at a candidate primal/dual point, infinity norms.
inline KktResiduals kkt_residuals(const NLPProblem& p, const SolveResult& r) {
    using namespace detail;
    const Eval ev = evaluate(p, r.z);
    KktResiduals k;
    Eigen::VectorXd stat = ev.grad;
    if (p.m_e > 0) stat -= ev.je.transpose() * r.lambda;
    if (p.m_i > 0) stat -= ev.ji.transpose() * r.nu;
    k.stationarity = inf_norm(stat);
    double pf = p.m_e > 0 ? inf_norm(ev.ce) : 0.0;
    if (p.m_i > 0) pf = std::max(pf, std::max(0.0, -ev.ci.minCoeff()));
    k.primal_feasibility = pf;
    k.dual_feasibility = p.m_i > 0 ? std::max(0.0, -r.nu.minCoeff()) : 0.0;
    k.complementarity = p.m_i > 0 ? inf_norm(ev.ci.cwiseProduct(r.nu)) : 0.0;
    return k;
}

} // namespace ipm
} // namespace opf
