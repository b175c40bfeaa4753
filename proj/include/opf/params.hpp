#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "opf/grid.hpp"

namespace opf {

enum class ParameterDomain { load_only, all_params };

inline const char* to_string(ParameterDomain d) {
    return d == ParameterDomain::load_only ? "load" : "all";
}

inline ParameterDomain parameter_domain_from_string(const std::string& s) {
    if (s == "load" || s == "load_only") return ParameterDomain::load_only;
    if (s == "all" || s == "all_params") return ParameterDomain::all_params;
    throw ValidationError("unknown parameter domain '" + s + "'");
}

/// Which grid quantity a parameter entry controls. pd/qd/pmax/qmax are node
/// types, rate_a/r/x are edge types.
enum class ParamField { pd, qd, pmax, qmax, rate_a, r, x };

inline bool is_node_field(ParamField f) {
    return f == ParamField::pd || f == ParamField::qd || f == ParamField::pmax ||
           f == ParamField::qmax;
}

inline const char* to_string(ParamField f) {
    switch (f) {
        case ParamField::pd: return "pd";
        case ParamField::qd: return "qd";
        case ParamField::pmax: return "pmax";
        case ParamField::qmax: return "qmax";
        case ParamField::rate_a: return "rate_a";
        case ParamField::r: return "r";
        case ParamField::x: return "x";
    }
    return "?";
}

/// One slot of the parameter vector. `element` is a positional index: a bus
/// position for pd/qd, a generator position for pmax/qmax, a branch position
/// for rate_a/r/x.
struct ParamEntry {
    ParamField field;
    int element;

    bool operator==(const ParamEntry&) const = default;
};

/// Index map, defaults and sampling box for one (case, domain) pair.
///
/// Entries exist for load fields of buses with nonzero nominal load and, in
/// the all-parameters domain, for every nonzero generator limit and branch
/// field. Zero-valued fields are excluded: the percentage box around zero is
/// degenerate and the quantity is effectively not a control variable.
/// The box is +-15% for pd and +-10% for everything else.
class ParameterSpace {
public:
    static ParameterSpace build(const GridCase& gc, ParameterDomain domain) {
        ParameterSpace ps;
        ps.domain_ = domain;
        auto add = [&ps](ParamField f, int el, double def, double frac) {
            if (def == 0.0) return;
            ps.entries_.push_back({f, el});
            ps.defaults_.push_back(def);
            ps.lo_.push_back(def - frac * std::abs(def));
            ps.hi_.push_back(def + frac * std::abs(def));
        };
        for (std::size_t b = 0; b < gc.buses.size(); ++b) {
            const Bus& bus = gc.buses[b];
            if (bus.pd == 0.0 && bus.qd == 0.0) continue;
            add(ParamField::pd, static_cast<int>(b), bus.pd, 0.15);
            add(ParamField::qd, static_cast<int>(b), bus.qd, 0.10);
        }
        if (domain == ParameterDomain::all_params) {
            for (std::size_t g = 0; g < gc.generators.size(); ++g) {
                add(ParamField::pmax, static_cast<int>(g), gc.generators[g].pmax, 0.10);
                add(ParamField::qmax, static_cast<int>(g), gc.generators[g].qmax, 0.10);
            }
            for (std::size_t k = 0; k < gc.branches.size(); ++k) {
                add(ParamField::rate_a, static_cast<int>(k), gc.branches[k].rate_a, 0.10);
                add(ParamField::r, static_cast<int>(k), gc.branches[k].r, 0.10);
                add(ParamField::x, static_cast<int>(k), gc.branches[k].x, 0.10);
            }
        }
        return ps;
    }

    ParameterDomain domain() const { return domain_; }
    int dim() const { return static_cast<int>(entries_.size()); }
    const std::vector<ParamEntry>& index_map() const { return entries_; }

    Eigen::VectorXd defaults() const { return to_vec(defaults_); }
    Eigen::VectorXd lower() const { return to_vec(lo_); }
    Eigen::VectorXd upper() const { return to_vec(hi_); }

    /// Affine map onto the unit cube; rejects out-of-box values.
    Eigen::VectorXd normalize(const Eigen::VectorXd& values) const {
        check_dim(values);
        Eigen::VectorXd u(dim());
        for (int i = 0; i < dim(); ++i) {
            if (values(i) < lo_[static_cast<std::size_t>(i)] ||
                values(i) > hi_[static_cast<std::size_t>(i)])
                throw ValidationError("normalize: entry " + std::to_string(i) + " (" +
                                      describe(i) + ") outside bounds");
            u(i) = (values(i) - lo_[static_cast<std::size_t>(i)]) /
                   (hi_[static_cast<std::size_t>(i)] - lo_[static_cast<std::size_t>(i)]);
        }
        return u;
    }

    Eigen::VectorXd denormalize(const Eigen::VectorXd& unit) const {
        check_dim(unit);
        Eigen::VectorXd v(dim());
        for (int i = 0; i < dim(); ++i)
            v(i) = lo_[static_cast<std::size_t>(i)] +
                   unit(i) * (hi_[static_cast<std::size_t>(i)] - lo_[static_cast<std::size_t>(i)]);
        return v;
    }

    /// Copy of `gc` with the parameter assignment written into it.
    GridCase apply(const GridCase& gc, const Eigen::VectorXd& values) const {
        check_dim(values);
        GridCase out = gc;
        for (int i = 0; i < dim(); ++i) {
            const ParamEntry& e = entries_[static_cast<std::size_t>(i)];
            const double v = values(i);
            switch (e.field) {
                case ParamField::pd: out.buses.at(static_cast<std::size_t>(e.element)).pd = v; break;
                case ParamField::qd: out.buses.at(static_cast<std::size_t>(e.element)).qd = v; break;
                case ParamField::pmax:
                    out.generators.at(static_cast<std::size_t>(e.element)).pmax = v;
                    break;
                case ParamField::qmax:
                    out.generators.at(static_cast<std::size_t>(e.element)).qmax = v;
                    break;
                case ParamField::rate_a:
                    if (v <= 0.0) throw ValidationError("apply: rate_a must stay positive");
                    out.branches.at(static_cast<std::size_t>(e.element)).rate_a = v;
                    break;
                case ParamField::r: out.branches.at(static_cast<std::size_t>(e.element)).r = v; break;
                case ParamField::x:
                    if (v == 0.0) throw ValidationError("apply: reactance must stay nonzero");
                    out.branches.at(static_cast<std::size_t>(e.element)).x = v;
                    break;
            }
        }
        return out;
    }

    std::string describe(int i) const {
        const ParamEntry& e = entries_.at(static_cast<std::size_t>(i));
        return std::string(to_string(e.field)) + "[" + std::to_string(e.element) + "]";
    }

private:
    static Eigen::VectorXd to_vec(const std::vector<double>& v) {
        return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    void check_dim(const Eigen::VectorXd& v) const {
        if (v.size() != dim())
            throw ValidationError("parameter vector has length " + std::to_string(v.size()) +
                                  ", expected " + std::to_string(dim()));
    }

    ParameterDomain domain_ = ParameterDomain::load_only;
    std::vector<ParamEntry> entries_;
    std::vector<double> defaults_, lo_, hi_;
};

/// A concrete parameter assignment in physical units.
struct ParameterVector {
    ParameterDomain domain = ParameterDomain::load_only;
    Eigen::VectorXd values;
};

} // namespace opf
