#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "opf/grid.hpp"
#include "opf/nlp.hpp"
#include "opf/params.hpp"

namespace opf {

using Complex = std::complex<double>;
using VectorXcd = Eigen::VectorXcd;
using MatrixXcd = Eigen::MatrixXcd;

enum class ConstraintFamily { gen_p, gen_q, bus_v, flow_from, flow_to, angle };

inline const char* to_string(ConstraintFamily f) {
    switch (f) {
        case ConstraintFamily::gen_p: return "gen_p";
        case ConstraintFamily::gen_q: return "gen_q";
        case ConstraintFamily::bus_v: return "bus_v";
        case ConstraintFamily::flow_from: return "flow_from";
        case ConstraintFamily::flow_to: return "flow_to";
        case ConstraintFamily::angle: return "angle";
    }
    return "?";
}

enum class BoundSide { lower, upper };

/// Identity of one inequality constraint. The canonical enumeration is
/// family-major in the order gen_p, gen_q, bus_v, flow_from, flow_to, angle;
/// elements ascending within a family; lower before upper. Flow families have
/// upper entries only. This order defines the on-disk classifier label schema.
struct ConstraintId {
    ConstraintFamily family;
    int element;
    BoundSide side;

    bool operator==(const ConstraintId&) const = default;

    std::string describe() const {
        return std::string(to_string(family)) + "[" + std::to_string(element) + "]" +
               (side == BoundSide::lower ? ".lo" : ".up");
    }
};

/// Full primal assignment: per-bus voltage magnitude/angle and per-generator
/// injections, all p.u. (angles rad).
struct OpfPoint {
    Eigen::VectorXd vm, va, pg, qg;
};

/// Voltage magnitudes then generator active injections, the minimum
/// information a warm start needs. Length |V| + |G|.
struct RegressionTarget {
    Eigen::VectorXd y;
};

/// The AC-OPF mathematical program for one parameter assignment: objective,
/// 2|V| power-balance equalities and the canonical inequality registry,
/// with analytic first and second derivatives.
class OPFProblem {
public:
    static OPFProblem build(const GridCase& gc) {
        validate(gc);
        OPFProblem p;
        p.case_ = gc;
        p.n_ = static_cast<int>(gc.n_buses());
        p.ng_ = static_cast<int>(gc.n_generators());
        p.nb_ = static_cast<int>(gc.n_branches());
        p.slack_ = gc.slack_index();
        p.gen_bus_.resize(p.ng_);
        for (int g = 0; g < p.ng_; ++g) p.gen_bus_[g] = gc.bus_index(gc.generators[g].bus);
        p.build_admittance();
        p.build_constraint_registry();
        return p;
    }

    const GridCase& grid() const { return case_; }
    int n_buses() const { return n_; }
    int n_generators() const { return ng_; }
    int n_branches() const { return nb_; }
    int slack() const { return slack_; }
    const std::vector<int>& gen_bus() const { return gen_bus_; }
    const MatrixXcd& ybus() const { return ybus_; }

    const std::vector<ConstraintId>& inequalities() const { return ineq_; }
    int n_inequalities() const { return static_cast<int>(ineq_.size()); }

    /// Position of a ConstraintId in the canonical order.
    int constraint_index(const ConstraintId& id) const {
        for (std::size_t k = 0; k < ineq_.size(); ++k)
            if (ineq_[k] == id) return static_cast<int>(k);
        throw ValidationError("constraint not in registry: " + id.describe());
    }

    // ----- variable packing: z = [va(non-slack); vm; pg; qg] -----

    int n_vars() const { return 2 * n_ - 1 + 2 * ng_; }
    int va_index(int bus) const { return bus < slack_ ? bus : bus - 1; } // bus != slack
    int vm_index(int bus) const { return n_ - 1 + bus; }
    int pg_index(int g) const { return 2 * n_ - 1 + g; }
    int qg_index(int g) const { return 2 * n_ - 1 + ng_ + g; }

    Eigen::VectorXd pack(const OpfPoint& pt) const {
        Eigen::VectorXd z(n_vars());
        for (int b = 0; b < n_; ++b) {
            if (b != slack_) z(va_index(b)) = pt.va(b);
            z(vm_index(b)) = pt.vm(b);
        }
        for (int g = 0; g < ng_; ++g) {
            z(pg_index(g)) = pt.pg(g);
            z(qg_index(g)) = pt.qg(g);
        }
        return z;
    }

    OpfPoint unpack(const Eigen::VectorXd& z) const {
        OpfPoint pt;
        pt.va = Eigen::VectorXd::Zero(n_);
        pt.vm = Eigen::VectorXd::Zero(n_);
        pt.pg = Eigen::VectorXd::Zero(ng_);
        pt.qg = Eigen::VectorXd::Zero(ng_);
        for (int b = 0; b < n_; ++b) {
            if (b != slack_) pt.va(b) = z(va_index(b));
            pt.vm(b) = z(vm_index(b));
        }
        for (int g = 0; g < ng_; ++g) {
            pt.pg(g) = z(pg_index(g));
            pt.qg(g) = z(qg_index(g));
        }
        return pt;
    }

    // ----- evaluation -----

    VectorXcd complex_voltage(const OpfPoint& pt) const {
        VectorXcd v(n_);
        for (int b = 0; b < n_; ++b) v(b) = std::polar(pt.vm(b), pt.va(b));
        return v;
    }

    /// Per-bus active then reactive power-balance residuals, p.u.
    Eigen::VectorXd equality_residuals(const OpfPoint& pt) const {
        const VectorXcd v = complex_voltage(pt);
        const VectorXcd s = v.array() * (ybus_ * v).array().conjugate();
        Eigen::VectorXd r(2 * n_);
        for (int b = 0; b < n_; ++b) {
            r(b) = -case_.buses[static_cast<std::size_t>(b)].pd - s(b).real();
            r(n_ + b) = -case_.buses[static_cast<std::size_t>(b)].qd - s(b).imag();
        }
        for (int g = 0; g < ng_; ++g) {
            r(gen_bus_[g]) += pt.pg(g);
            r(n_ + gen_bus_[g]) += pt.qg(g);
        }
        return r;
    }

    /// Value of each inequality in `subset` (canonical indices); >= 0 iff
    /// satisfied. Bound families return val-lo / hi-val, flow families
    /// rate^2 - |S|^2 at the designated end.
    Eigen::VectorXd inequality_values(const OpfPoint& pt, const std::vector<int>& subset) const {
        Eigen::VectorXd out(static_cast<Eigen::Index>(subset.size()));
        for (std::size_t k = 0; k < subset.size(); ++k)
            out(static_cast<Eigen::Index>(k)) = inequality_value(pt, ineq_[static_cast<std::size_t>(subset[k])]);
        return out;
    }

    Eigen::VectorXd inequality_values(const OpfPoint& pt) const {
        return inequality_values(pt, all_indices());
    }

    double inequality_value(const OpfPoint& pt, const ConstraintId& id) const {
        const auto e = static_cast<std::size_t>(id.element);
        switch (id.family) {
            case ConstraintFamily::gen_p:
                return id.side == BoundSide::lower ? pt.pg(id.element) - case_.generators[e].pmin
                                                   : case_.generators[e].pmax - pt.pg(id.element);
            case ConstraintFamily::gen_q:
                return id.side == BoundSide::lower ? pt.qg(id.element) - case_.generators[e].qmin
                                                   : case_.generators[e].qmax - pt.qg(id.element);
            case ConstraintFamily::bus_v:
                return id.side == BoundSide::lower ? pt.vm(id.element) - case_.buses[e].vmin
                                                   : case_.buses[e].vmax - pt.vm(id.element);
            case ConstraintFamily::flow_from:
            case ConstraintFamily::flow_to: {
                const Branch& br = case_.branches[e];
                const double rate2 = br.rate_a * br.rate_a;
                return rate2 - std::norm(branch_flow(pt, id.element,
                                                     id.family == ConstraintFamily::flow_from));
            }
            case ConstraintFamily::angle: {
                const Branch& br = case_.branches[e];
                const double d = pt.va(case_.bus_index(br.from_bus)) - pt.va(case_.bus_index(br.to_bus));
                return id.side == BoundSide::lower ? d - br.angmin() : br.angmax() - d;
            }
        }
        return 0.0;
    }

    /// Complex power flow into branch `k` measured at the from or to end.
    Complex branch_flow(const OpfPoint& pt, int k, bool from_side) const {
        const BranchAdmittance& y = brad_[static_cast<std::size_t>(k)];
        const Branch& br = case_.branches[static_cast<std::size_t>(k)];
        const int f = case_.bus_index(br.from_bus);
        const int t = case_.bus_index(br.to_bus);
        const Complex vf = std::polar(pt.vm(f), pt.va(f));
        const Complex vt = std::polar(pt.vm(t), pt.va(t));
        if (from_side) return vf * std::conj(y.ff * vf + y.ft * vt);
        return vt * std::conj(y.tf * vf + y.tt * vt);
    }

    /// Generation cost in $/h (Pg converted to MW).
    double objective(const OpfPoint& pt) const {
        const double S = case_.base_mva;
        double total = 0.0;
        for (int g = 0; g < ng_; ++g) {
            const Generator& gen = case_.generators[static_cast<std::size_t>(g)];
            const double p = pt.pg(g) * S;
            total += gen.c2 * p * p + gen.c1 * p + gen.c0;
        }
        return total;
    }

    /// 1 iff the inequality value is <= tol (p.u. scale).
    std::vector<std::uint8_t> binding_status(const OpfPoint& pt, double tol) const {
        if (tol < 0.0) throw ValidationError("binding_status: tol must be >= 0");
        const Eigen::VectorXd vals = inequality_values(pt);
        std::vector<std::uint8_t> out(static_cast<std::size_t>(vals.size()));
        for (Eigen::Index i = 0; i < vals.size(); ++i) out[static_cast<std::size_t>(i)] = vals(i) <= tol;
        return out;
    }

    /// [vm; pg] in canonical component order.
    Eigen::VectorXd regression_vector(const OpfPoint& pt) const {
        Eigen::VectorXd y(n_ + ng_);
        y.head(n_) = pt.vm;
        y.tail(ng_) = pt.pg;
        return y;
    }

    // ----- derivatives -----

    Eigen::VectorXd objective_gradient(const OpfPoint& pt) const {
        const double S = case_.base_mva;
        Eigen::VectorXd g = Eigen::VectorXd::Zero(n_vars());
        for (int k = 0; k < ng_; ++k) {
            const Generator& gen = case_.generators[static_cast<std::size_t>(k)];
            g(pg_index(k)) = (2.0 * gen.c2 * pt.pg(k) * S + gen.c1) * S;
        }
        return g;
    }

    Eigen::MatrixXd equality_jacobian(const OpfPoint& pt) const {
        const VectorXcd v = complex_voltage(pt);
        MatrixXcd ds_dva, ds_dvm;
        injection_jacobian(v, ds_dva, ds_dvm);
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * n_, n_vars());
        for (int row = 0; row < n_; ++row) {
            for (int b = 0; b < n_; ++b) {
                if (b != slack_) {
                    j(row, va_index(b)) = -ds_dva(row, b).real();
                    j(n_ + row, va_index(b)) = -ds_dva(row, b).imag();
                }
                j(row, vm_index(b)) = -ds_dvm(row, b).real();
                j(n_ + row, vm_index(b)) = -ds_dvm(row, b).imag();
            }
        }
        for (int g = 0; g < ng_; ++g) {
            j(gen_bus_[g], pg_index(g)) = 1.0;
            j(n_ + gen_bus_[g], qg_index(g)) = 1.0;
        }
        return j;
    }

    Eigen::MatrixXd inequality_jacobian(const OpfPoint& pt, const std::vector<int>& subset) const {
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(subset.size()), n_vars());
        for (std::size_t k = 0; k < subset.size(); ++k) {
            const ConstraintId& id = ineq_[static_cast<std::size_t>(subset[k])];
            const auto row = static_cast<Eigen::Index>(k);
            const double sgn = id.side == BoundSide::lower ? 1.0 : -1.0;
            switch (id.family) {
                case ConstraintFamily::gen_p: j(row, pg_index(id.element)) = sgn; break;
                case ConstraintFamily::gen_q: j(row, qg_index(id.element)) = sgn; break;
                case ConstraintFamily::bus_v: j(row, vm_index(id.element)) = sgn; break;
                case ConstraintFamily::flow_from:
                case ConstraintFamily::flow_to: {
                    double d[4];
                    int idx[4];
                    flow_sq_gradient(pt, id.element, id.family == ConstraintFamily::flow_from, d, idx);
                    for (int c = 0; c < 4; ++c)
                        if (idx[c] >= 0) j(row, idx[c]) -= d[c]; // c = rate^2 - |S|^2
                    break;
                }
                case ConstraintFamily::angle: {
                    const Branch& br = case_.branches[static_cast<std::size_t>(id.element)];
                    const int f = case_.bus_index(br.from_bus);
                    const int t = case_.bus_index(br.to_bus);
                    if (f != slack_) j(row, va_index(f)) = sgn;
                    if (t != slack_) j(row, va_index(t)) = -sgn;
                    break;
                }
            }
        }
        return j;
    }

    /// W = s grad^2 f - sum lambda_i grad^2 cE_i - sum nu_k grad^2 cI_k over
    /// the packed variables. `subset` selects which inequalities nu refers to.
    Eigen::MatrixXd lagrangian_hessian(const OpfPoint& pt, const Eigen::VectorXd& lambda,
                                       const Eigen::VectorXd& nu, const std::vector<int>& subset,
                                       double obj_scale = 1.0) const {
        const double S = case_.base_mva;
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_vars(), n_vars());
        for (int g = 0; g < ng_; ++g)
            w(pg_index(g), pg_index(g)) =
                obj_scale * 2.0 * case_.generators[static_cast<std::size_t>(g)].c2 * S * S;

        // power balance: W += Re{ d2(w^T S)/dV2 } with w = lamP - i lamQ
        // (cE contains -S, and the sign flips once more inside W's definition)
        const VectorXcd v = complex_voltage(pt);
        VectorXcd wmult(n_);
        for (int b = 0; b < n_; ++b) wmult(b) = Complex(lambda(b), -lambda(n_ + b));
        MatrixXcd haa, hav, hva, hvv;
        injection_hessian(v, wmult, haa, hav, hva, hvv);
        for (int a = 0; a < n_; ++a) {
            for (int b = 0; b < n_; ++b) {
                const int ia = a != slack_ ? va_index(a) : -1;
                const int ib = b != slack_ ? va_index(b) : -1;
                if (ia >= 0 && ib >= 0) w(ia, ib) += haa(a, b).real();
                if (ia >= 0) w(ia, vm_index(b)) += hav(a, b).real();
                if (ib >= 0) w(vm_index(a), ib) += hva(a, b).real();
                w(vm_index(a), vm_index(b)) += hvv(a, b).real();
            }
        }

        // flow constraints: c = rate^2 - |S|^2  =>  -nu grad^2 c = +nu grad^2 |S|^2
        for (std::size_t k = 0; k < subset.size(); ++k) {
            const ConstraintId& id = ineq_[static_cast<std::size_t>(subset[k])];
            if (id.family != ConstraintFamily::flow_from && id.family != ConstraintFamily::flow_to)
                continue;
            const double mult = nu(static_cast<Eigen::Index>(k));
            if (mult == 0.0) continue;
            double h[4][4];
            int idx[4];
            flow_sq_hessian(pt, id.element, id.family == ConstraintFamily::flow_from, h, idx);
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    if (idx[a] >= 0 && idx[b] >= 0) w(idx[a], idx[b]) += mult * h[a][b];
        }
        return w;
    }

    std::vector<int> all_indices() const {
        std::vector<int> idx(ineq_.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
        return idx;
    }

    /// NLP view over a subset of the inequality registry (canonical indices).
    /// `obj_scale` multiplies the objective and its derivatives. The view
    /// borrows this problem: keep it alive while the solver runs.
    NLPProblem to_nlp(std::vector<int> subset, double obj_scale = 1.0) const {
        NLPProblem nlp;
        nlp.n = n_vars();
        nlp.m_e = 2 * n_;
        nlp.m_i = static_cast<int>(subset.size());
        const OPFProblem* self = this;
        auto sub = std::make_shared<std::vector<int>>(std::move(subset));
        nlp.objective = [self, obj_scale](const Eigen::VectorXd& z) {
            return obj_scale * self->objective(self->unpack(z));
        };
        nlp.gradient = [self, obj_scale](const Eigen::VectorXd& z) {
            return (obj_scale * self->objective_gradient(self->unpack(z))).eval();
        };
        nlp.eq_residuals = [self](const Eigen::VectorXd& z) {
            return self->equality_residuals(self->unpack(z));
        };
        nlp.eq_jacobian = [self](const Eigen::VectorXd& z) {
            return self->equality_jacobian(self->unpack(z));
        };
        nlp.ineq_values = [self, sub](const Eigen::VectorXd& z) {
            return self->inequality_values(self->unpack(z), *sub);
        };
        nlp.ineq_jacobian = [self, sub](const Eigen::VectorXd& z) {
            return self->inequality_jacobian(self->unpack(z), *sub);
        };
        nlp.lagrangian_hessian = [self, sub, obj_scale](const Eigen::VectorXd& z,
                                                        const Eigen::VectorXd& lambda,
                                                        const Eigen::VectorXd& nu) {
            return self->lagrangian_hessian(self->unpack(z), lambda, nu, *sub, obj_scale);
        };
        return nlp;
    }

private:
    struct BranchAdmittance {
        Complex ff, ft, tf, tt;
    };

    void build_admittance() {
        ybus_ = MatrixXcd::Zero(n_, n_);
        brad_.resize(static_cast<std::size_t>(nb_));
        for (int k = 0; k < nb_; ++k) {
            const Branch& br = case_.branches[static_cast<std::size_t>(k)];
            const int f = case_.bus_index(br.from_bus);
            const int t = case_.bus_index(br.to_bus);
            const Complex ys = 1.0 / Complex(br.r, br.x);
            const Complex bc(0.0, br.b / 2.0);
            const Complex tap = std::polar(br.tap, br.shift());
            BranchAdmittance y;
            y.ff = (ys + bc) / (br.tap * br.tap);
            y.ft = -ys / std::conj(tap);
            y.tf = -ys / tap;
            y.tt = ys + bc;
            brad_[static_cast<std::size_t>(k)] = y;
            ybus_(f, f) += y.ff;
            ybus_(f, t) += y.ft;
            ybus_(t, f) += y.tf;
            ybus_(t, t) += y.tt;
        }
        for (int b = 0; b < n_; ++b)
            ybus_(b, b) += Complex(case_.buses[static_cast<std::size_t>(b)].gs,
                                   case_.buses[static_cast<std::size_t>(b)].bs);
    }

    void build_constraint_registry() {
        ineq_.clear();
        for (int g = 0; g < ng_; ++g) {
            ineq_.push_back({ConstraintFamily::gen_p, g, BoundSide::lower});
            ineq_.push_back({ConstraintFamily::gen_p, g, BoundSide::upper});
        }
        for (int g = 0; g < ng_; ++g) {
            ineq_.push_back({ConstraintFamily::gen_q, g, BoundSide::lower});
            ineq_.push_back({ConstraintFamily::gen_q, g, BoundSide::upper});
        }
        for (int b = 0; b < n_; ++b) {
            ineq_.push_back({ConstraintFamily::bus_v, b, BoundSide::lower});
            ineq_.push_back({ConstraintFamily::bus_v, b, BoundSide::upper});
        }
        for (int k = 0; k < nb_; ++k) ineq_.push_back({ConstraintFamily::flow_from, k, BoundSide::upper});
        for (int k = 0; k < nb_; ++k) ineq_.push_back({ConstraintFamily::flow_to, k, BoundSide::upper});
        for (int k = 0; k < nb_; ++k) {
            if (!case_.branches[static_cast<std::size_t>(k)].has_angle_limits()) continue;
            ineq_.push_back({ConstraintFamily::angle, k, BoundSide::lower});
            ineq_.push_back({ConstraintFamily::angle, k, BoundSide::upper});
        }
    }

    /// dS/dVa and dS/dVm of the bus injection vector S(V) = diag(V) conj(Y V).
    void injection_jacobian(const VectorXcd& v, MatrixXcd& ds_dva, MatrixXcd& ds_dvm) const {
        const VectorXcd ibus = ybus_ * v;
        const VectorXcd e = v.array() / v.array().abs(); // unit phasors
        MatrixXcd diagv = v.asDiagonal();
        ds_dva = Complex(0, 1) * diagv * (MatrixXcd(ibus.asDiagonal()) - ybus_ * diagv).conjugate();
        ds_dvm = diagv * (ybus_ * MatrixXcd(e.asDiagonal())).conjugate() +
                 MatrixXcd(ibus.conjugate().asDiagonal()) * MatrixXcd(e.asDiagonal());
    }

    /// Hessian blocks of w^T S(V) for a complex multiplier vector w.
    void injection_hessian(const VectorXcd& v, const VectorXcd& w, MatrixXcd& haa, MatrixXcd& hav,
                           MatrixXcd& hva, MatrixXcd& hvv) const {
        const VectorXcd ibus = ybus_ * v;
        MatrixXcd diagv = v.asDiagonal();
        MatrixXcd a = (w.array() * v.array()).matrix().asDiagonal();
        MatrixXcd b = ybus_ * diagv;
        MatrixXcd c = a * b.conjugate();
        MatrixXcd d = ybus_.adjoint() * diagv;
        MatrixXcd e = diagv.conjugate() * (d * MatrixXcd(w.asDiagonal()) - MatrixXcd((d * w).asDiagonal()));
        MatrixXcd f = c - a * MatrixXcd(ibus.conjugate().asDiagonal());
        Eigen::VectorXd vm_inv = v.array().abs().inverse();
        MatrixXcd g = vm_inv.asDiagonal();
        haa = e + f;
        hva = Complex(0, 1) * g * (e - f);
        hav = hva.transpose();
        hvv = g * (c + c.transpose()) * g;
    }

    /// Gradient of |S_branch|^2 over (va_f, va_t, vm_f, vm_t); idx holds the
    /// packed column of each local variable (-1 for the slack angle).
    void flow_sq_gradient(const OpfPoint& pt, int k, bool from_side, double d[4], int idx[4]) const {
        Complex s, ds[3]; // d/d omega, d/d vm_own, d/d vm_other
        flow_local_derivs(pt, k, from_side, s, ds, nullptr);
        const Branch& br = case_.branches[static_cast<std::size_t>(k)];
        const int f = case_.bus_index(br.from_bus);
        const int t = case_.bus_index(br.to_bus);
        const int own = from_side ? f : t;
        const int other = from_side ? t : f;
        // dA = 2 Re{ conj(S) dS }
        const double da_domega = 2.0 * (std::conj(s) * ds[0]).real();
        const double da_dvown = 2.0 * (std::conj(s) * ds[1]).real();
        const double da_dvother = 2.0 * (std::conj(s) * ds[2]).real();
        // omega = va_own - va_other
        d[0] = da_domega;   // va_own
        d[1] = -da_domega;  // va_other
        d[2] = da_dvown;    // vm_own
        d[3] = da_dvother;  // vm_other
        idx[0] = own != slack_ ? va_index(own) : -1;
        idx[1] = other != slack_ ? va_index(other) : -1;
        idx[2] = vm_index(own);
        idx[3] = vm_index(other);
    }

    /// Hessian of |S_branch|^2 over the same local variables.
    void flow_sq_hessian(const OpfPoint& pt, int k, bool from_side, double h[4][4], int idx[4]) const {
        Complex s, ds[3], d2s[3][3];
        flow_local_derivs(pt, k, from_side, s, ds, &d2s);
        // H_loc over (omega, vm_own, vm_other):
        double hloc[3][3];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                hloc[a][b] = 2.0 * (std::conj(ds[a]) * ds[b] + std::conj(s) * d2s[a][b]).real();
        // chain omega = va_own - va_other: local order -> (va_own, va_other, vm_own, vm_other)
        const double sign[4] = {1.0, -1.0, 0.0, 0.0};
        const int map[4] = {0, 0, 1, 2}; // which local var each packed var touches
        for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b) {
                const double fa = a < 2 ? sign[a] : 1.0;
                const double fb = b < 2 ? sign[b] : 1.0;
                h[a][b] = fa * fb * hloc[map[a]][map[b]];
            }
        }
        const Branch& br = case_.branches[static_cast<std::size_t>(k)];
        const int f = case_.bus_index(br.from_bus);
        const int t = case_.bus_index(br.to_bus);
        const int own = from_side ? f : t;
        const int other = from_side ? t : f;
        idx[0] = own != slack_ ? va_index(own) : -1;
        idx[1] = other != slack_ ? va_index(other) : -1;
        idx[2] = vm_index(own);
        idx[3] = vm_index(other);
    }

    /// S at one branch end as a function of (omega, vm_own, vm_other) where
    /// omega is the angle of the measuring end minus the other end:
    ///   S = a u^2 + c u w e^{i omega}.
    void flow_local_derivs(const OpfPoint& pt, int k, bool from_side, Complex& s, Complex ds[3],
                           Complex (*d2s)[3][3]) const {
        const BranchAdmittance& y = brad_[static_cast<std::size_t>(k)];
        const Branch& br = case_.branches[static_cast<std::size_t>(k)];
        const int f = case_.bus_index(br.from_bus);
        const int t = case_.bus_index(br.to_bus);
        const Complex a = std::conj(from_side ? y.ff : y.tt);
        const Complex c = std::conj(from_side ? y.ft : y.tf);
        const double u = from_side ? pt.vm(f) : pt.vm(t);
        const double w = from_side ? pt.vm(t) : pt.vm(f);
        const double omega = from_side ? pt.va(f) - pt.va(t) : pt.va(t) - pt.va(f);
        const Complex eo = std::polar(1.0, omega);
        const Complex j(0.0, 1.0);
        s = a * u * u + c * u * w * eo;
        ds[0] = j * c * u * w * eo;      // d/d omega
        ds[1] = 2.0 * a * u + c * w * eo; // d/d u
        ds[2] = c * u * eo;               // d/d w
        if (d2s) {
            (*d2s)[0][0] = -c * u * w * eo;
            (*d2s)[0][1] = j * c * w * eo;
            (*d2s)[0][2] = j * c * u * eo;
            (*d2s)[1][0] = (*d2s)[0][1];
            (*d2s)[1][1] = 2.0 * a;
            (*d2s)[1][2] = c * eo;
            (*d2s)[2][0] = (*d2s)[0][2];
            (*d2s)[2][1] = (*d2s)[1][2];
            (*d2s)[2][2] = Complex(0.0, 0.0);
        }
    }

    GridCase case_;
    int n_ = 0, ng_ = 0, nb_ = 0, slack_ = 0;
    std::vector<int> gen_bus_;
    MatrixXcd ybus_;
    std::vector<BranchAdmittance> brad_;
    std::vector<ConstraintId> ineq_;
};

/// apply_parameters: copy of `gc` with the mapped fields replaced.
inline GridCase apply_parameters(const GridCase& gc, const ParameterSpace& space,
                                 const Eigen::VectorXd& values) {
    return space.apply(gc, values);
}

} // namespace opf
