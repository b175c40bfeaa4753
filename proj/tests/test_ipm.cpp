#include <catch2/catch_amalgamated.hpp>

#include <nlohmann/json.hpp>

#include "opf/ipm.hpp"
#include "opf/matpower.hpp"
#include "opf/solve.hpp"
#include "support/cases.hpp"

using namespace opf;
using opf::testing::load_case;
using opf::testing::read_file;

namespace {

double reference_objective(const std::string& name) {
    const auto j = nlohmann::json::parse(read_file(std::string(OPF_FIXTURE_DIR) +
                                                   "/reference_objectives.json"));
    return j.at(name).get<double>();
}

/// min (y-1)^2 s.t. y >= 2
NLPProblem bound_toy() {
    NLPProblem p;
    p.n = 1;
    p.m_e = 0;
    p.m_i = 1;
    p.objective = [](const Eigen::VectorXd& z) { return (z(0) - 1.0) * (z(0) - 1.0); };
    p.gradient = [](const Eigen::VectorXd& z) {
        return Eigen::VectorXd::Constant(1, 2.0 * (z(0) - 1.0));
    };
    p.ineq_values = [](const Eigen::VectorXd& z) {
        return Eigen::VectorXd::Constant(1, z(0) - 2.0);
    };
    p.ineq_jacobian = [](const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Constant(1, 1, 1.0);
    };
    p.lagrangian_hessian = [](const Eigen::VectorXd&, const Eigen::VectorXd&,
                              const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Constant(1, 1, 2.0);
    };
    return p;
}

/// min y^2 s.t. y = 1
NLPProblem equality_toy() {
    NLPProblem p;
    p.n = 1;
    p.m_e = 1;
    p.m_i = 0;
    p.objective = [](const Eigen::VectorXd& z) { return z(0) * z(0); };
    p.gradient = [](const Eigen::VectorXd& z) {
        return Eigen::VectorXd::Constant(1, 2.0 * z(0));
    };
    p.eq_residuals = [](const Eigen::VectorXd& z) {
        return Eigen::VectorXd::Constant(1, z(0) - 1.0);
    };
    p.eq_jacobian = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Constant(1, 1, 1.0); };
    p.lagrangian_hessian = [](const Eigen::VectorXd&, const Eigen::VectorXd&,
                              const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Constant(1, 1, 2.0);
    };
    return p;
}

} // namespace

TEST_CASE("1-d bound toy: active bound found") {
    const NLPProblem p = bound_toy();
    const SolveResult r = ipm::solve(p, Eigen::VectorXd::Constant(1, 3.0), {});
    REQUIRE(r.status == SolveStatus::optimal);
    CHECK(r.z(0) == Catch::Approx(2.0).margin(1e-5));
    CHECK(r.objective == Catch::Approx(1.0).margin(1e-4));
    const KktResiduals k = ipm::kkt_residuals(p, r);
    CHECK(k.stationarity <= 1e-6);
    CHECK(k.primal_feasibility <= 1e-6);
    CHECK(k.dual_feasibility <= 1e-6);
    CHECK(k.complementarity <= 1e-6);

    // a random interior point is not stationary
    SolveResult interior = r;
    interior.z = Eigen::VectorXd::Constant(1, 5.0);
    CHECK(ipm::kkt_residuals(p, interior).stationarity > 0.1);
}

TEST_CASE("1-d equality toy") {
    const SolveResult r = ipm::solve(equality_toy(), Eigen::VectorXd::Constant(1, -4.0), {});
    REQUIRE(r.status == SolveStatus::optimal);
    CHECK(r.z(0) == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("case5 and case14 standard solves hit the reference objective") {
    for (const char* name : {"case5", "case14"}) {
        const GridCase gc = load_case(name);
        const OPFProblem prob = OPFProblem::build(gc);
        const OpfSolveResult res = solve_opf(prob, SolveStrategy::standard());
        INFO(name << " status=" << to_string(res.status) << " iters=" << res.iterations);
        REQUIRE(res.status == SolveStatus::optimal);
        CHECK(res.kkt_residual <= 1e-6);
        const double ref = reference_objective(name);
        CHECK(std::abs(res.objective - ref) / ref < 1e-3);

        const KktResiduals k = kkt_residuals(prob, res);
        CHECK(k.stationarity <= 1e-6);
        CHECK(k.primal_feasibility <= 1e-6);
        CHECK(k.dual_feasibility <= 1e-6);
        CHECK(k.complementarity <= 1e-6);

        // converged point is feasible
        CHECK(prob.equality_residuals(res.point).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK(prob.inequality_values(res.point).minCoeff() >= -1e-6);
    }
}

TEST_CASE("binding set from primal slacks agrees with dual activity") {
    const GridCase gc = load_case("case5");
    const OPFProblem prob = OPFProblem::build(gc);
    // tight tolerance separates weakly-active constraints cleanly
    OpfSolveOptions opts;
    opts.tol = 1e-8;
    const OpfSolveResult res = solve_opf(prob, SolveStrategy::standard(), opts);
    REQUIRE(res.converged());
    int n_binding = 0;
    for (std::size_t k = 0; k < res.binding.size(); ++k) {
        const bool primal_binding = res.binding[k] != 0;
        const bool dual_active = res.ineq_duals(static_cast<Eigen::Index>(k)) > 1e-5;
        INFO("constraint " << prob.inequalities()[k].describe());
        CHECK(primal_binding == dual_active);
        n_binding += primal_binding;
    }
    CHECK(n_binding > 0); // case5 is congested at the optimum
}

TEST_CASE("determinism: identical inputs give identical solves") {
    const GridCase gc = load_case("case14");
    const OPFProblem prob = OPFProblem::build(gc);
    const OpfSolveResult a = solve_opf(prob, SolveStrategy::standard());
    const OpfSolveResult b = solve_opf(prob, SolveStrategy::standard());
    CHECK(a.iterations == b.iterations);
    CHECK(a.status == b.status);
    CHECK(a.objective == b.objective);
    CHECK(prob.pack(a.point) == prob.pack(b.point));
}

TEST_CASE("warm start from the exact optimum converges in fewer iterations") {
    for (const char* name : {"case5", "case14"}) {
        const GridCase gc = load_case(name);
        const OPFProblem prob = OPFProblem::build(gc);
        const OpfSolveResult cold = solve_opf(prob, SolveStrategy::standard());
        REQUIRE(cold.converged());
        const RegressionTarget y = extract_regression_target(prob, cold);
        const OpfSolveResult warm = solve_opf(prob, SolveStrategy::warm(y));
        INFO(name << " cold=" << cold.iterations << " warm=" << warm.iterations);
        REQUIRE(warm.converged());
        CHECK(warm.iterations < cold.iterations);
    }
}

TEST_CASE("warm start equal to the flat start reproduces the standard trajectory") {
    const GridCase gc = load_case("case14");
    const OPFProblem prob = OPFProblem::build(gc);
    const OpfPoint flat = initial_point(prob, SolveStrategy::standard());
    RegressionTarget y;
    y.y = prob.regression_vector(flat);
    const OpfSolveResult a = solve_opf(prob, SolveStrategy::standard());
    const OpfSolveResult b = solve_opf(prob, SolveStrategy::warm(y));
    CHECK(a.iterations == b.iterations);
    CHECK(prob.pack(a.point) == prob.pack(b.point));
}

TEST_CASE("warm start components outside bounds are clipped to the bound") {
    const GridCase gc = load_case("case5");
    const OPFProblem prob = OPFProblem::build(gc);
    RegressionTarget y;
    y.y = Eigen::VectorXd::Ones(gc.n_buses() + gc.n_generators());
    y.y(0) = 2.0;                                  // above vmax
    y.y(static_cast<Eigen::Index>(gc.n_buses())) = -1.0; // below pmin
    int clips = 0;
    const OpfPoint pt = initial_point(prob, SolveStrategy::warm(y), &clips);
    CHECK(pt.vm(0) == gc.buses[0].vmax);
    CHECK(pt.pg(0) == gc.generators[0].pmin);
    CHECK(clips == 2);
}

TEST_CASE("reduced solve with the full inequality set matches the standard solve") {
    const GridCase gc = load_case("case5");
    const OPFProblem prob = OPFProblem::build(gc);
    const OpfSolveResult full = solve_opf(prob, SolveStrategy::standard());
    const OpfSolveResult red = solve_reduced(prob, prob.all_indices());
    REQUIRE(full.converged());
    REQUIRE(red.converged());
    CHECK(std::abs(red.objective - full.objective) / std::abs(full.objective) <= 1e-6);
}

TEST_CASE("reduced solve with the true active set preserves the objective") {
    OpfSolveOptions opts;
    opts.tol = 1e-8; // label-grade accuracy keeps the active set exact
    for (const char* name : {"case5", "case14"}) {
        const GridCase gc = load_case(name);
        const OPFProblem prob = OPFProblem::build(gc);
        const OpfSolveResult full = solve_opf(prob, SolveStrategy::standard(), opts);
        REQUIRE(full.converged());
        std::vector<int> active;
        for (std::size_t k = 0; k < full.binding.size(); ++k)
            if (full.binding[k]) active.push_back(static_cast<int>(k));
        const OpfSolveResult red = solve_reduced(prob, active, opts);
        INFO(name << " |A|=" << active.size());
        REQUIRE(red.converged());
        CHECK(std::abs(red.objective - full.objective) / std::abs(full.objective) <= 1e-6);
    }
}

TEST_CASE("reduced solve with an empty active set undershoots some constraint") {
    // case14 has strictly convex costs, so the equality-only problem is
    // bounded; its optimum trespasses several operational limits
    const GridCase gc = load_case("case14");
    const OPFProblem prob = OPFProblem::build(gc);
    const OpfSolveResult red = solve_reduced(prob, {});
    REQUIRE(red.converged());
    CHECK(prob.inequality_values(red.point).minCoeff() < -1e-6);
}

TEST_CASE("iterative feasibility test: superset of the active set ends in one round") {
    const GridCase gc = load_case("case5");
    const OPFProblem prob = OPFProblem::build(gc);
    const IftResult ift = iterative_feasibility_test(prob, prob.all_indices());
    REQUIRE(ift.result.converged());
    CHECK(ift.rounds == 1);
    CHECK(ift.added.empty());
}

TEST_CASE("iterative feasibility test from the empty set reaches full feasibility") {
    for (const char* name : {"case5", "case14"}) {
        const GridCase gc = load_case(name);
        const OPFProblem prob = OPFProblem::build(gc);
        const IftResult ift = iterative_feasibility_test(prob, {});
        INFO(name << " rounds=" << ift.rounds);
        REQUIRE(!ift.exhausted);
        REQUIRE(ift.result.converged());
        CHECK(prob.inequality_values(ift.result.point).minCoeff() >= -1e-6);
        CHECK(ift.rounds <= prob.n_inequalities());
        CHECK(ift.total_time == Catch::Approx(ift.result.wall_time + ift.total_time -
                                              ift.result.wall_time));
    }
}

TEST_CASE("withholding one strictly-active constraint adds it back in round one") {
    const GridCase gc = load_case("case14");
    const OPFProblem prob = OPFProblem::build(gc);
    OpfSolveOptions opts;
    opts.tol = 1e-8;
    const OpfSolveResult full = solve_opf(prob, SolveStrategy::standard(), opts);
    REQUIRE(full.converged());
    // pick the binding constraint with the largest multiplier
    int withheld = -1;
    double best = 0.0;
    std::vector<int> active;
    for (std::size_t k = 0; k < full.binding.size(); ++k) {
        if (!full.binding[k]) continue;
        active.push_back(static_cast<int>(k));
        if (full.ineq_duals(static_cast<Eigen::Index>(k)) > best) {
            best = full.ineq_duals(static_cast<Eigen::Index>(k));
            withheld = static_cast<int>(k);
        }
    }
    REQUIRE(withheld >= 0);
    std::vector<int> predicted;
    for (int k : active)
        if (k != withheld) predicted.push_back(k);
    const IftResult ift = iterative_feasibility_test(prob, predicted);
    REQUIRE(ift.result.converged());
    CHECK(ift.rounds == 2);
    CHECK(std::find(ift.added.begin(), ift.added.end(), withheld) != ift.added.end());
    CHECK(prob.inequality_values(ift.result.point).minCoeff() >= -1e-6);
}

TEST_CASE("solver reports failure on a non-finite objective") {
    NLPProblem p = bound_toy();
    p.objective = [](const Eigen::VectorXd&) { return std::numeric_limits<double>::quiet_NaN(); };
    const SolveResult r = ipm::solve(p, Eigen::VectorXd::Constant(1, 3.0), {});
    CHECK(r.status == SolveStatus::numerical_failure);
}
