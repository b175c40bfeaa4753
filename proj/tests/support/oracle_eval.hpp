#pragma once

// Straight-from-textbook evaluator for the OPF functions, written against the
// case data with scalar loops and trig identities only. Used to cross-check
// opf::OPFProblem's matrix-based evaluation.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "opf/acopf.hpp"
#include "opf/rng.hpp"
#include "support/newton_pf.hpp"

namespace opf::testing {

inline Eigen::VectorXd oracle_equality_residuals(const opf::GridCase& gc, const opf::OpfPoint& pt) {
    const int n = static_cast<int>(gc.n_buses());
    const Eigen::MatrixXcd y = oracle_ybus(gc);
    Eigen::VectorXd p, q;
    oracle_injections(y, pt.vm, pt.va, p, q);
    Eigen::VectorXd r(2 * n);
    for (int b = 0; b < n; ++b) {
        double pg_sum = 0.0, qg_sum = 0.0;
        for (std::size_t g = 0; g < gc.generators.size(); ++g) {
            if (gc.bus_index(gc.generators[g].bus) != b) continue;
            pg_sum += pt.pg(static_cast<Eigen::Index>(g));
            qg_sum += pt.qg(static_cast<Eigen::Index>(g));
        }
        r(b) = pg_sum - gc.buses[static_cast<std::size_t>(b)].pd - p(b);
        r(n + b) = qg_sum - gc.buses[static_cast<std::size_t>(b)].qd - q(b);
    }
    return r;
}

/// Apparent-power magnitude squared at one branch end from scalar formulas.
inline double oracle_flow_sq(const opf::GridCase& gc, const opf::OpfPoint& pt, int k,
                             bool from_side) {
    const opf::Branch& br = gc.branches[static_cast<std::size_t>(k)];
    const int f = gc.bus_index(br.from_bus);
    const int t = gc.bus_index(br.to_bus);
    const std::complex<double> ys = 1.0 / std::complex<double>(br.r, br.x);
    const std::complex<double> bc(0.0, br.b / 2.0);
    const std::complex<double> tc = std::polar(br.tap, br.shift());
    const std::complex<double> vf = std::polar(pt.vm(f), pt.va(f));
    const std::complex<double> vt = std::polar(pt.vm(t), pt.va(t));
    std::complex<double> s;
    if (from_side) {
        const std::complex<double> i_f = ((ys + bc) / (br.tap * br.tap)) * vf - (ys / std::conj(tc)) * vt;
        s = vf * std::conj(i_f);
    } else {
        const std::complex<double> i_t = -(ys / tc) * vf + (ys + bc) * vt;
        s = vt * std::conj(i_t);
    }
    return std::norm(s);
}

inline Eigen::VectorXd oracle_inequality_values(const opf::GridCase& gc, const opf::OpfPoint& pt,
                                                const std::vector<opf::ConstraintId>& ids) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(ids.size()));
    for (std::size_t k = 0; k < ids.size(); ++k) {
        const opf::ConstraintId& id = ids[k];
        double v = 0.0;
        const auto e = static_cast<std::size_t>(id.element);
        switch (id.family) {
            case opf::ConstraintFamily::gen_p:
                v = id.side == opf::BoundSide::lower ? pt.pg(id.element) - gc.generators[e].pmin
                                                     : gc.generators[e].pmax - pt.pg(id.element);
                break;
            case opf::ConstraintFamily::gen_q:
                v = id.side == opf::BoundSide::lower ? pt.qg(id.element) - gc.generators[e].qmin
                                                     : gc.generators[e].qmax - pt.qg(id.element);
                break;
            case opf::ConstraintFamily::bus_v:
                v = id.side == opf::BoundSide::lower ? pt.vm(id.element) - gc.buses[e].vmin
                                                     : gc.buses[e].vmax - pt.vm(id.element);
                break;
            case opf::ConstraintFamily::flow_from:
            case opf::ConstraintFamily::flow_to:
                v = gc.branches[e].rate_a * gc.branches[e].rate_a -
                    oracle_flow_sq(gc, pt, id.element, id.family == opf::ConstraintFamily::flow_from);
                break;
            case opf::ConstraintFamily::angle: {
                const opf::Branch& br = gc.branches[e];
                const double d =
                    pt.va(gc.bus_index(br.from_bus)) - pt.va(gc.bus_index(br.to_bus));
                v = id.side == opf::BoundSide::lower ? d - br.angmin() : br.angmax() - d;
                break;
            }
        }
        out(static_cast<Eigen::Index>(k)) = v;
    }
    return out;
}

inline double oracle_objective(const opf::GridCase& gc, const opf::OpfPoint& pt) {
    double total = 0.0;
    for (std::size_t g = 0; g < gc.generators.size(); ++g) {
        const double p = pt.pg(static_cast<Eigen::Index>(g)) * gc.base_mva;
        total += gc.generators[g].c2 * p * p + gc.generators[g].c1 * p + gc.generators[g].c0;
    }
    return total;
}

/// Random interior-ish point for evaluation cross-checks.
inline opf::OpfPoint random_point(const opf::GridCase& gc, opf::RngStream& rng) {
    const int n = static_cast<int>(gc.n_buses());
    const int ng = static_cast<int>(gc.n_generators());
    opf::OpfPoint pt;
    pt.vm.resize(n);
    pt.va.resize(n);
    pt.pg.resize(ng);
    pt.qg.resize(ng);
    const int slack = gc.slack_index();
    for (int b = 0; b < n; ++b) {
        const opf::Bus& bus = gc.buses[static_cast<std::size_t>(b)];
        pt.vm(b) = rng.uniform(bus.vmin, bus.vmax);
        pt.va(b) = b == slack ? 0.0 : rng.uniform(-0.3, 0.3);
    }
    for (int g = 0; g < ng; ++g) {
        const opf::Generator& gen = gc.generators[static_cast<std::size_t>(g)];
        pt.pg(g) = rng.uniform(gen.pmin, gen.pmax);
        pt.qg(g) = rng.uniform(gen.qmin, gen.qmax);
    }
    return pt;
}

} // namespace opf::testing
