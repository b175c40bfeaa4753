#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "opf/grid.hpp"

namespace opf {

namespace detail {

struct NumRow {
    std::vector<double> v;
    int line = 0; // 1-based source line, for error messages
};

inline std::string strip_comment(std::string_view line) {
    const auto pos = line.find('%');
    return std::string(pos == std::string_view::npos ? line : line.substr(0, pos));
}

inline bool parse_double(std::string_view tok, double& out) {
    const char* b = tok.data();
    const char* e = b + tok.size();
    auto res = std::from_chars(b, e, out);
    return res.ec == std::errc() && res.ptr == e;
}

/// Collect the numeric rows of `mpc.<table> = [ ... ];`.
inline std::vector<NumRow> read_table(const std::string& text, const std::string& table) {
    const std::string key = "mpc." + table;
    std::vector<NumRow> rows;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    bool inside = false;
    bool found = false;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = strip_comment(raw);
        if (!inside) {
            const auto kp = line.find(key);
            if (kp == std::string::npos) continue;
            const auto bp = line.find('[', kp);
            if (bp == std::string::npos)
                throw ParseError("line " + std::to_string(lineno) + ": expected '[' after " + key);
            inside = found = true;
            line = line.substr(bp + 1);
        }
        // table body: rows are ';'-terminated, block ends at "]"
        while (inside && !line.empty()) {
            const auto close = line.find(']');
            std::string chunk = close == std::string::npos ? line : line.substr(0, close);
            std::size_t start = 0;
            while (start < chunk.size()) {
                auto semi = chunk.find(';', start);
                const std::string row_text =
                    chunk.substr(start, semi == std::string::npos ? std::string::npos : semi - start);
                NumRow row;
                row.line = lineno;
                std::istringstream rs(row_text);
                std::string tok;
                while (rs >> tok) {
                    double val = 0.0;
                    if (!parse_double(tok, val))
                        throw ParseError("line " + std::to_string(lineno) + ": bad number '" + tok +
                                         "' in " + key);
                    row.v.push_back(val);
                }
                if (!row.v.empty()) rows.push_back(std::move(row));
                if (semi == std::string::npos) break;
                start = semi + 1;
            }
            if (close != std::string::npos) {
                inside = false;
                break;
            }
            line.clear();
        }
        if (found && !inside) break;
    }
    if (!found) throw ParseError("missing table " + key);
    if (inside) throw ParseError("unterminated table " + key);
    return rows;
}

inline std::optional<double> read_scalar(const std::string& text, const std::string& key) {
    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        std::string line = strip_comment(raw);
        const auto kp = line.find(key);
        if (kp == std::string::npos) continue;
        const auto eq = line.find('=', kp);
        if (eq == std::string::npos) continue;
        auto end = line.find(';', eq);
        if (end == std::string::npos) end = line.size();
        std::string tok = line.substr(eq + 1, end - eq - 1);
        // trim
        const auto a = tok.find_first_not_of(" \t\r");
        const auto b = tok.find_last_not_of(" \t\r");
        if (a == std::string::npos) continue;
        tok = tok.substr(a, b - a + 1);
        double val = 0.0;
        if (parse_double(tok, val)) return val;
    }
    return std::nullopt;
}

inline std::string read_case_name(const std::string& text) {
    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        std::string line = strip_comment(raw);
        const auto fp = line.find("function");
        if (fp == std::string::npos) continue;
        const auto eq = line.find('=', fp);
        if (eq == std::string::npos) continue;
        std::string name = line.substr(eq + 1);
        const auto a = name.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        auto b = name.find_first_of(" \t\r;(", a);
        if (b == std::string::npos) b = name.size();
        return name.substr(a, b - a);
    }
    return "unnamed";
}

/// Shortest decimal string that parses back to the same double.
inline std::string fmt_double(double v) {
    if (v == static_cast<long long>(v) && std::abs(v) < 1e15)
        return std::to_string(static_cast<long long>(v));
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

} // namespace detail

/// Parse the MATPOWER subset: mpc.bus / mpc.gen / mpc.branch / mpc.gencost
/// tables with standard column orders, polynomial costs only (model 2,
/// degree <= 3). Powers and admittances are converted to per-unit here.
inline GridCase parse_matpower(const std::string& text) {
    GridCase gc;
    gc.name = detail::read_case_name(text);
    const auto base = detail::read_scalar(text, "mpc.baseMVA");
    if (!base) throw ParseError("missing mpc.baseMVA");
    gc.base_mva = *base;
    if (gc.base_mva <= 0.0) throw ValidationError("baseMVA must be positive");
    const double S = gc.base_mva;

    for (const auto& row : detail::read_table(text, "bus")) {
        if (row.v.size() < 13)
            throw ParseError("line " + std::to_string(row.line) + ": bus row needs 13 columns, got " +
                             std::to_string(row.v.size()));
        Bus b;
        b.id = static_cast<int>(row.v[0]);
        const int t = static_cast<int>(row.v[1]);
        switch (t) {
            case 1: b.bus_type = BusType::pq; break;
            case 2: b.bus_type = BusType::pv; break;
            case 3: b.bus_type = BusType::slack; break;
            default:
                throw ParseError("line " + std::to_string(row.line) + ": bus type " +
                                 std::to_string(t) + " not supported");
        }
        b.pd = row.v[2] / S;
        b.qd = row.v[3] / S;
        b.gs = row.v[4] / S;
        b.bs = row.v[5] / S;
        b.vmax = row.v[11];
        b.vmin = row.v[12];
        gc.buses.push_back(b);
    }

    for (const auto& row : detail::read_table(text, "gen")) {
        if (row.v.size() < 10)
            throw ParseError("line " + std::to_string(row.line) + ": gen row needs >= 10 columns");
        if (row.v[7] <= 0.0) continue; // out of service
        Generator g;
        g.bus = static_cast<int>(row.v[0]);
        g.qmax = row.v[3] / S;
        g.qmin = row.v[4] / S;
        g.pmax = row.v[8] / S;
        g.pmin = row.v[9] / S;
        gc.generators.push_back(g);
    }

    for (const auto& row : detail::read_table(text, "branch")) {
        if (row.v.size() < 13)
            throw ParseError("line " + std::to_string(row.line) + ": branch row needs 13 columns");
        if (row.v[10] <= 0.0) continue; // out of service
        Branch br;
        br.from_bus = static_cast<int>(row.v[0]);
        br.to_bus = static_cast<int>(row.v[1]);
        br.r = row.v[2];
        br.x = row.v[3];
        br.b = row.v[4];
        br.rate_a = row.v[5] / S;
        br.tap = row.v[8] == 0.0 ? 1.0 : row.v[8];
        br.shift_deg = row.v[9];
        br.angmin_deg = row.v[11];
        br.angmax_deg = row.v[12];
        gc.branches.push_back(br);
    }

    const auto cost_rows = detail::read_table(text, "gencost");
    // gencost rows follow in-service filtering of the gen table
    std::vector<detail::NumRow> kept;
    {
        const auto gen_rows = detail::read_table(text, "gen");
        if (cost_rows.size() != gen_rows.size())
            throw ParseError("gencost has " + std::to_string(cost_rows.size()) + " rows but gen has " +
                             std::to_string(gen_rows.size()));
        for (std::size_t i = 0; i < gen_rows.size(); ++i)
            if (gen_rows[i].v.size() >= 8 && gen_rows[i].v[7] > 0.0) kept.push_back(cost_rows[i]);
    }
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const auto& row = kept[i];
        if (row.v.size() < 4)
            throw ParseError("line " + std::to_string(row.line) + ": gencost row needs >= 4 columns");
        const int model = static_cast<int>(row.v[0]);
        if (model != 2)
            throw ParseError("line " + std::to_string(row.line) +
                             ": only polynomial gencost (model=2) supported");
        const int ncost = static_cast<int>(row.v[3]);
        if (ncost < 1 || ncost > 3)
            throw ParseError("line " + std::to_string(row.line) +
                             ": polynomial degree must be <= 3 coefficients, got " +
                             std::to_string(ncost));
        if (row.v.size() < 4 + static_cast<std::size_t>(ncost))
            throw ParseError("line " + std::to_string(row.line) + ": gencost row truncated");
        Generator& g = gc.generators[i];
        // coefficients arrive highest order first
        double c[3] = {0.0, 0.0, 0.0}; // c2, c1, c0
        for (int k = 0; k < ncost; ++k) c[3 - ncost + k] = row.v[4 + static_cast<std::size_t>(k)];
        g.c2 = c[0];
        g.c1 = c[1];
        g.c0 = c[2];
    }

    // canonical component order: buses by id, generators by bus id then the
    // remaining fields; keeps label/target vectors independent of file row
    // order. Branches keep file order (the constraint registry needs every
    // row, parallel ones included).
    std::sort(gc.buses.begin(), gc.buses.end(),
              [](const Bus& a, const Bus& b) { return a.id < b.id; });
    std::stable_sort(gc.generators.begin(), gc.generators.end(),
                     [](const Generator& a, const Generator& b) {
                         return std::tie(a.bus, a.pmax, a.pmin, a.qmax, a.qmin, a.c2, a.c1, a.c0) <
                                std::tie(b.bus, b.pmax, b.pmin, b.qmax, b.qmin, b.c2, b.c1, b.c0);
                     });

    validate(gc);
    return gc;
}

/// Emit the case in the same MATPOWER subset (MW / MVAr / degrees on disk).
inline std::string serialize_matpower(const GridCase& gc) {
    using detail::fmt_double;
    const double S = gc.base_mva;
    std::string out;
    out += "function mpc = " + gc.name + "\n";
    out += "mpc.version = '2';\n";
    out += "mpc.baseMVA = " + fmt_double(gc.base_mva) + ";\n\n";

    out += "%% bus data\nmpc.bus = [\n";
    for (const Bus& b : gc.buses) {
        const int type = b.bus_type == BusType::slack ? 3 : (b.bus_type == BusType::pv ? 2 : 1);
        out += "\t" + std::to_string(b.id) + "\t" + std::to_string(type);
        for (double v : {b.pd * S, b.qd * S, b.gs * S, b.bs * S}) out += "\t" + fmt_double(v);
        out += "\t1\t1\t0\t0\t1"; // area, Vm, Va, baseKV, zone
        out += "\t" + fmt_double(b.vmax) + "\t" + fmt_double(b.vmin) + ";\n";
    }
    out += "];\n\n";

    out += "%% generator data\nmpc.gen = [\n";
    for (const Generator& g : gc.generators) {
        out += "\t" + std::to_string(g.bus) + "\t0\t0";
        out += "\t" + fmt_double(g.qmax * S) + "\t" + fmt_double(g.qmin * S);
        out += "\t1\t" + fmt_double(S) + "\t1";
        out += "\t" + fmt_double(g.pmax * S) + "\t" + fmt_double(g.pmin * S) + ";\n";
    }
    out += "];\n\n";

    out += "%% branch data\nmpc.branch = [\n";
    for (const Branch& br : gc.branches) {
        out += "\t" + std::to_string(br.from_bus) + "\t" + std::to_string(br.to_bus);
        for (double v : {br.r, br.x, br.b}) out += "\t" + fmt_double(v);
        const double rate = br.rate_a * S;
        out += "\t" + fmt_double(rate) + "\t" + fmt_double(rate) + "\t" + fmt_double(rate);
        out += "\t" + fmt_double(br.tap) + "\t" + fmt_double(br.shift_deg);
        out += "\t1\t" + fmt_double(br.angmin_deg) + "\t" + fmt_double(br.angmax_deg) + ";\n";
    }
    out += "];\n\n";

    out += "%% generator cost data\nmpc.gencost = [\n";
    for (const Generator& g : gc.generators) {
        out += "\t2\t0\t0\t3\t" + fmt_double(g.c2) + "\t" + fmt_double(g.c1) + "\t" +
               fmt_double(g.c0) + ";\n";
    }
    out += "];\n";
    return out;
}

} // namespace opf
