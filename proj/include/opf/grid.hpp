#pragma once

#include <cmath>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "opf/errors.hpp"

namespace opf {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline double deg2rad(double d) { return d * (kPi / 180.0); }
inline double rad2deg(double r) { return r * (180.0 / kPi); }

enum class BusType { slack, pv, pq };

/// One network node. Powers and admittances are stored per-unit on the system
/// base; angle columns keep the file's degree values (see accessors).
struct Bus {
    int id = 0;
    BusType bus_type = BusType::pq;
    double pd = 0.0;   // active load, p.u.
    double qd = 0.0;   // reactive load, p.u.
    double vmin = 0.0; // voltage magnitude bounds, p.u.
    double vmax = 0.0;
    double gs = 0.0;   // shunt conductance, p.u.
    double bs = 0.0;   // shunt susceptance, p.u.

    bool operator==(const Bus&) const = default;
};

/// One transmission element (line or transformer).
struct Branch {
    int from_bus = 0;
    int to_bus = 0;
    double r = 0.0;      // series resistance, p.u.
    double x = 0.0;      // series reactance, p.u.
    double b = 0.0;      // total charging susceptance, p.u.
    double rate_a = 0.0; // thermal rating, p.u.
    double tap = 1.0;    // magnitude; 1.0 when the file said 0
    // Degrees as read from the file; radians come from the accessors below.
    // Degree<->radian conversion does not round-trip bitwise, and the
    // serializer must reproduce the file exactly.
    double shift_deg = 0.0;
    double angmin_deg = -360.0;
    double angmax_deg = 360.0;

    double shift() const { return deg2rad(shift_deg); }
    double angmin() const { return deg2rad(angmin_deg); }
    double angmax() const { return deg2rad(angmax_deg); }

    /// Angle-difference limits take part in the constraint set only when the
    /// file pins them to a proper sub-interval of (-360, 360).
    bool has_angle_limits() const {
        if (angmin_deg == 0.0 && angmax_deg == 0.0) return false;
        return angmin_deg > -360.0 && angmax_deg < 360.0 && angmin_deg < angmax_deg;
    }

    bool operator==(const Branch&) const = default;
};

/// One dispatchable unit with a polynomial cost curve. Cost coefficients stay
/// in MW units ($/MW^2 h, $/MWh, $/h); limits are p.u.
struct Generator {
    int bus = 0;
    double pmin = 0.0, pmax = 0.0;
    double qmin = 0.0, qmax = 0.0;
    double c2 = 0.0, c1 = 0.0, c0 = 0.0;

    bool operator==(const Generator&) const = default;
};

/// Static description of a power network. Immutable after construction; share
/// freely across workers.
struct GridCase {
    std::string name;
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;

    bool operator==(const GridCase&) const = default;

    std::size_t n_buses() const { return buses.size(); }
    std::size_t n_branches() const { return branches.size(); }
    std::size_t n_generators() const { return generators.size(); }

    /// Positional index of an external bus id.
    int bus_index(int bus_id) const {
        const auto& m = index_map();
        auto it = m.find(bus_id);
        if (it == m.end())
            throw ValidationError(name + ": unknown bus id " + std::to_string(bus_id));
        return it->second;
    }

    const Bus& bus(int bus_id) const { return buses[static_cast<std::size_t>(bus_index(bus_id))]; }

    int slack_index() const {
        for (std::size_t i = 0; i < buses.size(); ++i)
            if (buses[i].bus_type == BusType::slack) return static_cast<int>(i);
        throw ValidationError(name + ": no slack bus");
    }

    /// Generator positions attached to each bus position.
    std::vector<std::vector<int>> generators_by_bus() const {
        std::vector<std::vector<int>> out(buses.size());
        for (std::size_t g = 0; g < generators.size(); ++g)
            out[static_cast<std::size_t>(bus_index(generators[g].bus))].push_back(static_cast<int>(g));
        return out;
    }

private:
    mutable std::unordered_map<int, int> index_;

    const std::unordered_map<int, int>& index_map() const {
        if (index_.size() != buses.size()) {
            index_.clear();
            for (std::size_t i = 0; i < buses.size(); ++i)
                index_.emplace(buses[i].id, static_cast<int>(i));
        }
        return index_;
    }
};

/// Check every GridCase invariant; throws ValidationError on the first breach.
inline void validate(const GridCase& gc) {
    const std::string& nm = gc.name;
    if (gc.buses.empty()) throw ValidationError(nm + ": no buses");
    if (gc.base_mva <= 0.0) throw ValidationError(nm + ": base_mva must be positive");

    int n_slack = 0;
    std::unordered_map<int, int> seen;
    for (const Bus& b : gc.buses) {
        if (seen.count(b.id)) throw ValidationError(nm + ": duplicate bus id " + std::to_string(b.id));
        seen.emplace(b.id, 1);
        if (b.bus_type == BusType::slack) ++n_slack;
        if (!(b.vmin < b.vmax))
            throw ValidationError(nm + ": bus " + std::to_string(b.id) + " needs vmin < vmax");
        if (!std::isfinite(b.pd) || !std::isfinite(b.qd))
            throw ValidationError(nm + ": bus " + std::to_string(b.id) + " has non-finite load");
    }
    if (n_slack != 1)
        throw ValidationError(nm + ": expected exactly one slack bus, found " + std::to_string(n_slack));

    for (std::size_t k = 0; k < gc.branches.size(); ++k) {
        const Branch& br = gc.branches[k];
        const std::string tag = nm + ": branch " + std::to_string(k + 1);
        if (!seen.count(br.from_bus))
            throw ValidationError(tag + " references unknown bus " + std::to_string(br.from_bus));
        if (!seen.count(br.to_bus))
            throw ValidationError(tag + " references unknown bus " + std::to_string(br.to_bus));
        if (br.from_bus == br.to_bus) throw ValidationError(tag + " is a self-loop");
        if (br.x == 0.0) throw ValidationError(tag + " has zero reactance");
        if (!(br.rate_a > 0.0)) throw ValidationError(tag + " needs rate_a > 0");
    }

    for (std::size_t g = 0; g < gc.generators.size(); ++g) {
        const Generator& gen = gc.generators[g];
        const std::string tag = nm + ": generator " + std::to_string(g + 1);
        if (!seen.count(gen.bus))
            throw ValidationError(tag + " references unknown bus " + std::to_string(gen.bus));
        if (!(gen.pmin <= gen.pmax)) throw ValidationError(tag + " needs pmin <= pmax");
        if (!(gen.qmin <= gen.qmax)) throw ValidationError(tag + " needs qmin <= qmax");
        if (gen.c2 < 0.0) throw ValidationError(tag + " needs c2 >= 0");
    }

    // single connected component
    const std::size_t n = gc.buses.size();
    std::vector<std::vector<int>> adj(n);
    for (const Branch& br : gc.branches) {
        const int i = gc.bus_index(br.from_bus);
        const int j = gc.bus_index(br.to_bus);
        adj[static_cast<std::size_t>(i)].push_back(j);
        adj[static_cast<std::size_t>(j)].push_back(i);
    }
    std::vector<char> vis(n, 0);
    std::queue<int> q;
    q.push(0);
    vis[0] = 1;
    std::size_t reached = 1;
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int v : adj[static_cast<std::size_t>(u)])
            if (!vis[static_cast<std::size_t>(v)]) {
                vis[static_cast<std::size_t>(v)] = 1;
                ++reached;
                q.push(v);
            }
    }
    if (reached != n)
        throw ValidationError(nm + ": network is not a single connected component (" +
                              std::to_string(reached) + "/" + std::to_string(n) + " buses reachable)");
}

} // namespace opf
