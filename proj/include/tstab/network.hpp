#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tstab/errors.hpp"

namespace tstab {

struct Bus {
    int id = 0;
    double vm = 1.0; ///< prefault voltage magnitude, p.u.
    double va = 0.0; ///< prefault voltage angle, rad
};

struct Branch {
    int from = 0;
    int to = 0;
    double r = 0.0; ///< series resistance, p.u.
    double x = 0.0; ///< series reactance, p.u.
    double b = 0.0; ///< total line charging susceptance, p.u.
    bool in_service = true;
};

struct Generator {
    int bus = 0;
    double h = 0.0;        ///< inertia constant, s
    double xd_prime = 0.0; ///< transient reactance, p.u.
    double pm = 0.0;       ///< mechanical power, p.u. on system base
    double d = 0.0;        ///< damping torque coefficient, p.u./(p.u. speed)
    /// MVA base that `h` is given on; absent means system base.
    std::optional<double> mva_base;
};

struct Load {
    int bus = 0;
    double p = 0.0; ///< active power, p.u.
    double q = 0.0; ///< reactive power, p.u.
};

/// A solved prefault operating point plus the data needed to build the
/// stage admittance matrices and the classical machine models.
struct NetworkCase {
    double base_mva = 100.0;
    double frequency_hz = 60.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;
    std::vector<Load> loads;

    /// Synchronous speed in rad/s.
    double omega_sync() const { return 2.0 * M_PI * frequency_hz; }

    /// Inertia coefficient M_i = 2 H_i / omega_s with H on system base.
    double inertia_coefficient(const Generator& g) const {
        double h_sys = g.h;
        if (g.mva_base)
            h_sys = g.h * (*g.mva_base) / base_mva;
        return 2.0 * h_sys / omega_sync();
    }

    int bus_index(int id) const {
        auto it = bus_index_of.find(id);
        if (it == bus_index_of.end())
            throw InputError("unknown bus id " + std::to_string(id));
        return it->second;
    }

    bool has_bus(int id) const { return bus_index_of.count(id) != 0; }

    /// Rebuilds the id -> index map; called by validate().
    void reindex() {
        bus_index_of.clear();
        for (std::size_t i = 0; i < buses.size(); ++i) {
            if (!bus_index_of.emplace(buses[i].id, static_cast<int>(i)).second)
                throw InputError("duplicate bus id " + std::to_string(buses[i].id));
        }
    }

    void validate() {
        reindex();
        if (base_mva <= 0.0)
            throw InputError("base_mva must be positive");
        if (frequency_hz <= 0.0)
            throw InputError("frequency_hz must be positive");
        if (buses.empty())
            throw InputError("case has no buses");
        for (const auto& b : buses) {
            if (!(b.vm > 0.0))
                throw InputError("bus " + std::to_string(b.id) +
                                 ": prefault voltage magnitude must be positive");
        }
        for (const auto& br : branches) {
            if (!has_bus(br.from) || !has_bus(br.to))
                throw InputError("branch " + std::to_string(br.from) + "-" +
                                 std::to_string(br.to) + " references an unknown bus");
            if (br.r == 0.0 && br.x == 0.0)
                throw InputError("branch " + std::to_string(br.from) + "-" +
                                 std::to_string(br.to) + " has zero impedance");
        }
        if (generators.empty())
            throw InputError("case has no generators");
        std::vector<int> gen_buses;
        for (const auto& g : generators)
            gen_buses.push_back(g.bus);
        std::sort(gen_buses.begin(), gen_buses.end());
        if (std::adjacent_find(gen_buses.begin(), gen_buses.end()) != gen_buses.end())
            throw InputError("two generators share a terminal bus; machine ids "
                             "are terminal bus ids and must be unique");
        for (const auto& g : generators) {
            if (!has_bus(g.bus))
                throw InputError("generator at unknown bus " + std::to_string(g.bus));
            if (!(g.h > 0.0))
                throw InputError("generator at bus " + std::to_string(g.bus) +
                                 ": H must be positive");
            if (!(g.xd_prime > 0.0))
                throw InputError("generator at bus " + std::to_string(g.bus) +
                                 ": xd_prime must be positive");
            if (g.mva_base && !(*g.mva_base > 0.0))
                throw InputError("generator at bus " + std::to_string(g.bus) +
                                 ": mva_base must be positive");
        }
        for (const auto& l : loads) {
            if (!has_bus(l.bus))
                throw InputError("load at unknown bus " + std::to_string(l.bus));
        }
    }

private:
    std::unordered_map<int, int> bus_index_of;
};

namespace detail {

inline double require_number(const nlohmann::json& j, const char* key,
                             const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw InputError(where + ": missing or non-numeric field '" + key + "'");
    return j.at(key).get<double>();
}

inline int require_int(const nlohmann::json& j, const char* key,
                       const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number_integer())
        throw InputError(where + ": missing or non-integer field '" + key + "'");
    return j.at(key).get<int>();
}

} // namespace detail

/// Parses a case from its JSON document. All electrical quantities are
/// expected in p.u. on the declared system base; angles in radians.
inline NetworkCase case_from_json(const nlohmann::json& doc) {
    NetworkCase c;
    c.base_mva = detail::require_number(doc, "base_mva", "case");
    c.frequency_hz = doc.contains("frequency_hz")
                         ? detail::require_number(doc, "frequency_hz", "case")
                         : 60.0;
    if (!doc.contains("buses") || !doc.at("buses").is_array())
        throw InputError("case: missing 'buses' array");
    for (const auto& jb : doc.at("buses")) {
        Bus b;
        b.id = detail::require_int(jb, "id", "bus");
        b.vm = detail::require_number(jb, "vm", "bus " + std::to_string(b.id));
        b.va = detail::require_number(jb, "va", "bus " + std::to_string(b.id));
        c.buses.push_back(b);
    }
    if (doc.contains("branches")) {
        for (const auto& jb : doc.at("branches")) {
            Branch br;
            br.from = detail::require_int(jb, "from", "branch");
            br.to = detail::require_int(jb, "to", "branch");
            const std::string where =
                "branch " + std::to_string(br.from) + "-" + std::to_string(br.to);
            br.r = detail::require_number(jb, "r", where);
            br.x = detail::require_number(jb, "x", where);
            br.b = jb.contains("b") ? detail::require_number(jb, "b", where) : 0.0;
            br.in_service = jb.value("in_service", true);
            c.branches.push_back(br);
        }
    }
    if (!doc.contains("generators") || !doc.at("generators").is_array())
        throw InputError("case: missing 'generators' array");
    for (const auto& jg : doc.at("generators")) {
        Generator g;
        g.bus = detail::require_int(jg, "bus", "generator");
        const std::string where = "generator at bus " + std::to_string(g.bus);
        g.h = detail::require_number(jg, "H", where);
        g.xd_prime = detail::require_number(jg, "xd_prime", where);
        g.pm = detail::require_number(jg, "Pm", where);
        g.d = jg.contains("D") ? detail::require_number(jg, "D", where) : 0.0;
        if (jg.contains("mva_base"))
            g.mva_base = detail::require_number(jg, "mva_base", where);
        c.generators.push_back(g);
    }
    if (doc.contains("loads")) {
        for (const auto& jl : doc.at("loads")) {
            Load l;
            l.bus = detail::require_int(jl, "bus", "load");
            const std::string where = "load at bus " + std::to_string(l.bus);
            l.p = detail::require_number(jl, "P", where);
            l.q = detail::require_number(jl, "Q", where);
            c.loads.push_back(l);
        }
    }
    c.validate();
    return c;
}

inline NetworkCase load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open case file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("case file " + path + ": " + e.what());
    }
    return case_from_json(doc);
}

} // namespace tstab
