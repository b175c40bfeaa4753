#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "opf/acopf.hpp"
#include "opf/ipm.hpp"
#include "opf/nlp.hpp"

namespace opf {

enum class StrategyKind { standard, warm_start, reduced };

inline const char* to_string(StrategyKind k) {
    switch (k) {
        case StrategyKind::standard: return "standard";
        case StrategyKind::warm_start: return "warm";
        case StrategyKind::reduced: return "reduced";
    }
    return "?";
}

/// How to drive the solver: cold full problem, primal warm start from an
/// inferred optimum, or the reduced problem keeping only `active`.
struct SolveStrategy {
    StrategyKind kind = StrategyKind::standard;
    RegressionTarget y0;            // warm_start: [vm; pg], physical units
    std::vector<int> active;        // reduced: canonical inequality indices

    static SolveStrategy standard() { return {}; }
    static SolveStrategy warm(RegressionTarget y) {
        SolveStrategy s;
        s.kind = StrategyKind::warm_start;
        s.y0 = std::move(y);
        return s;
    }
    static SolveStrategy reduced(std::vector<int> active) {
        SolveStrategy s;
        s.kind = StrategyKind::reduced;
        s.active = std::move(active);
        return s;
    }
};

struct OpfSolveOptions : SolveOptions {
    double binding_tol = 1e-5; // p.u. slack below which a constraint counts as binding
    int max_rounds = 20;       // iterative feasibility test round limit
};

struct OpfSolveResult {
    SolveStatus status = SolveStatus::numerical_failure;
    OpfPoint point;
    Eigen::VectorXd eq_duals;
    Eigen::VectorXd ineq_duals;        // over solved_subset
    std::vector<int> solved_subset;    // canonical indices the solver saw
    double objective = 0.0;            // $/h, unscaled
    int iterations = 0;
    double wall_time = 0.0;
    double kkt_residual = 0.0;         // scaled-problem KKT error
    std::vector<std::uint8_t> binding; // over solved_subset
    int warm_clip_count = 0;

    bool converged() const { return status == SolveStatus::optimal; }
};

/// Primal initialization per strategy. Standard and reduced use the flat
/// start (bound midpoints, zero angles); warm start takes Vm and Pg from y0
/// clipped into bounds, zero angles, midpoint Qg. Duals always start at 1.
inline OpfPoint initial_point(const OPFProblem& prob, const SolveStrategy& strategy,
                              int* clip_count = nullptr) {
    const GridCase& gc = prob.grid();
    const int n = prob.n_buses(), ng = prob.n_generators();
    OpfPoint pt;
    pt.vm.resize(n);
    pt.va = Eigen::VectorXd::Zero(n);
    pt.pg.resize(ng);
    pt.qg.resize(ng);
    for (int b = 0; b < n; ++b)
        pt.vm(b) = 0.5 * (gc.buses[static_cast<std::size_t>(b)].vmin +
                          gc.buses[static_cast<std::size_t>(b)].vmax);
    for (int g = 0; g < ng; ++g) {
        const Generator& gen = gc.generators[static_cast<std::size_t>(g)];
        pt.pg(g) = 0.5 * (gen.pmin + gen.pmax);
        pt.qg(g) = 0.5 * (gen.qmin + gen.qmax);
    }
    int clips = 0;
    if (strategy.kind == StrategyKind::warm_start) {
        if (strategy.y0.y.size() != n + ng)
            throw ValidationError("warm start vector has length " +
                                  std::to_string(strategy.y0.y.size()) + ", expected " +
                                  std::to_string(n + ng));
        for (int b = 0; b < n; ++b) {
            const Bus& bus = gc.buses[static_cast<std::size_t>(b)];
            const double v = strategy.y0.y(b);
            const double c = std::clamp(v, bus.vmin, bus.vmax);
            if (c != v) ++clips;
            pt.vm(b) = c;
        }
        for (int g = 0; g < ng; ++g) {
            const Generator& gen = gc.generators[static_cast<std::size_t>(g)];
            const double v = strategy.y0.y(n + g);
            const double c = std::clamp(v, gen.pmin, gen.pmax);
            if (c != v) ++clips;
            pt.pg(g) = c;
        }
    }
    if (clip_count) *clip_count = clips;
    return pt;
}

namespace detail {

/// Objective scaling keeps the stationarity residual comparable to the p.u.
/// feasibility residuals; $-scale gradients would swamp the tolerance.
inline double objective_scale(const OPFProblem& prob) {
    const OpfPoint flat = initial_point(prob, SolveStrategy::standard());
    const double g = prob.objective_gradient(flat).cwiseAbs().maxCoeff();
    return 1.0 / std::max(1.0, g);
}

} // namespace detail

/// Solve the OPF with the requested strategy. The reduced strategy keeps all
/// equalities and only the selected inequalities.
inline OpfSolveResult solve_opf(const OPFProblem& prob, const SolveStrategy& strategy,
                                const OpfSolveOptions& opts = {}) {
    std::vector<int> subset;
    if (strategy.kind == StrategyKind::reduced) {
        subset = strategy.active;
        std::sort(subset.begin(), subset.end());
        subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
        if (!subset.empty() &&
            (subset.front() < 0 || subset.back() >= prob.n_inequalities()))
            throw ValidationError("reduced strategy: constraint index out of range");
    } else {
        subset = prob.all_indices();
    }
    const double scale = detail::objective_scale(prob);
    const NLPProblem nlp = prob.to_nlp(subset, scale);

    int clips = 0;
    const OpfPoint z0 = initial_point(prob, strategy, &clips);
    const SolveResult raw = ipm::solve(nlp, prob.pack(z0), opts);

    OpfSolveResult out;
    out.status = raw.status;
    out.point = prob.unpack(raw.z);
    out.eq_duals = raw.lambda;
    out.ineq_duals = raw.nu;
    out.solved_subset = subset;
    out.objective = prob.objective(out.point);
    out.iterations = raw.iterations;
    out.wall_time = raw.wall_time;
    out.kkt_residual = raw.kkt_residual;
    out.warm_clip_count = clips;
    const Eigen::VectorXd vals = prob.inequality_values(out.point, subset);
    out.binding.assign(static_cast<std::size_t>(vals.size()), 0);
    for (Eigen::Index i = 0; i < vals.size(); ++i)
        out.binding[static_cast<std::size_t>(i)] = vals(i) <= opts.binding_tol;
    return out;
}

inline OpfSolveResult solve_reduced(const OPFProblem& prob, const std::vector<int>& active,
                                    const OpfSolveOptions& opts = {}) {
    return solve_opf(prob, SolveStrategy::reduced(active), opts);
}

/// KKT residual blocks of an OPF solve, evaluated on the same scaled NLP the
/// solver saw.
inline KktResiduals kkt_residuals(const OPFProblem& prob, const OpfSolveResult& res) {
    const NLPProblem nlp = prob.to_nlp(res.solved_subset, detail::objective_scale(prob));
    SolveResult r;
    r.z = prob.pack(res.point);
    r.lambda = res.eq_duals;
    r.nu = res.ineq_duals;
    return ipm::kkt_residuals(nlp, r);
}

struct IftResult {
    OpfSolveResult result;       // last solve
    int rounds = 0;
    std::vector<int> added;      // canonical indices added across rounds
    double total_time = 0.0;     // sum of per-round solve times
    std::vector<double> round_times;
    bool exhausted = false;      // hit the round limit with violations left
};

/// Solve the reduced problem from a predicted active set, adding every
/// violated constraint and re-solving until the full problem is satisfied.
/// A failed round still contributes its violated constraints (an unbounded
/// reduced problem runs off exactly through the limits it is missing); the
/// loop gives up only when a failed solve exposes nothing new to add.
inline IftResult iterative_feasibility_test(const OPFProblem& prob,
                                            const std::vector<int>& predicted,
                                            const OpfSolveOptions& opts = {}) {
    std::set<int> active(predicted.begin(), predicted.end());
    IftResult out;
    for (int round = 0; round < opts.max_rounds; ++round) {
        const std::vector<int> subset(active.begin(), active.end());
        out.result = solve_reduced(prob, subset, opts);
        out.round_times.push_back(out.result.wall_time);
        out.total_time += out.result.wall_time;
        ++out.rounds;

        const Eigen::VectorXd vals = prob.inequality_values(out.result.point);
        std::vector<int> violated;
        for (Eigen::Index j = 0; j < vals.size(); ++j)
            if (vals(j) < -opts.tol && !active.count(static_cast<int>(j)))
                violated.push_back(static_cast<int>(j));
        if (violated.empty()) return out; // success if converged, stuck otherwise
        for (int j : violated) {
            active.insert(j);
            out.added.push_back(j);
        }
    }
    out.exhausted = true;
    return out;
}

/// Voltage magnitudes and generator injections of a converged solve; the
/// training label and warm-start payload.
inline RegressionTarget extract_regression_target(const OPFProblem& prob,
                                                  const OpfSolveResult& res) {
    if (!res.converged())
        throw ValidationError("extract_regression_target: solve did not converge (" +
                              std::string(to_string(res.status)) + ")");
    return RegressionTarget{prob.regression_vector(res.point)};
}

} // namespace opf
