#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tstab/assessment.hpp"
#include "tstab/cct.hpp"
#include "tstab/coi.hpp"
#include "tstab/simulation.hpp"
#include "tstab/version.hpp"

namespace tstab {

using ordered_json = nlohmann::ordered_json;

/// 15 significant digits, locale independent.
inline std::string format_sig(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

inline std::string now_iso8601() {
    const std::time_t t =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Invocation echo carried into every output artifact so a result can be
/// reproduced from the artifact alone.
struct RunManifest {
    std::string command;
    std::string case_path;
    std::string fault_spec;
    ordered_json parameters = ordered_json::object();
    std::string monitor_spec;
    std::vector<std::string> output_paths;
    std::string version = TSTAB_VERSION;
    std::string timestamp = now_iso8601();

    ordered_json to_json() const {
        ordered_json j;
        j["command"] = command;
        j["case"] = case_path;
        j["fault"] = fault_spec;
        j["parameters"] = parameters;
        if (!monitor_spec.empty())
            j["monitor"] = monitor_spec;
        j["outputs"] = output_paths;
        j["version"] = version;
        j["timestamp"] = timestamp;
        return j;
    }
};

/// Synchronous-frame trajectory with the COI-frame columns appended:
/// `t,delta_<id>...,omega_<id>...,theta_<id>...,ftilde_<id>...`.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr,
                                 const CoiFrame& coi,
                                 const std::vector<KimbarkSeries>& series) {
    os << "t";
    for (int id : tr.machine_ids)
        os << ",delta_" << id;
    for (int id : tr.machine_ids)
        os << ",omega_" << id;
    for (int id : tr.machine_ids)
        os << ",theta_" << id;
    for (int id : tr.machine_ids)
        os << ",ftilde_" << id;
    os << "\n";
    const int n = tr.size();
    for (int k = 0; k < tr.samples(); ++k) {
        os << format_sig(tr.times[k]);
        for (int i = 0; i < n; ++i)
            os << ',' << format_sig(tr.delta(i, k));
        for (int i = 0; i < n; ++i)
            os << ',' << format_sig(tr.omega(i, k));
        for (int i = 0; i < n; ++i)
            os << ',' << format_sig(coi.theta(i, k));
        for (int i = 0; i < n; ++i)
            os << ',' << format_sig(series[i].f[k]);
        os << "\n";
    }
}

inline void write_coi_csv(std::ostream& os, const Trajectory& tr,
                          const CoiFrame& coi) {
    os << "t,delta_coi,omega_coi\n";
    for (int k = 0; k < tr.samples(); ++k) {
        os << format_sig(tr.times[k]) << ',' << format_sig(coi.delta_coi[k]) << ','
           << format_sig(coi.omega_coi[k]) << "\n";
    }
}

/// Per-machine swing curve, speed deviation normalized to synchronous.
inline void write_kimbark_csv(std::ostream& os, const KimbarkSeries& series,
                              double omega_sync) {
    os << "t,theta_rad,f_pu,omega_pu\n";
    for (int k = 0; k < series.samples(); ++k) {
        os << format_sig(series.t[k]) << ',' << format_sig(series.theta[k]) << ','
           << format_sig(series.f[k]) << ','
           << format_sig(series.omega_rel[k] / omega_sync) << "\n";
    }
}

namespace detail {

inline ordered_json eta_json(const std::optional<double>& eta) {
    if (eta)
        return *eta;
    return "N/A";
}

inline ordered_json mdm_json(const std::vector<int>& mdm) {
    if (mdm.empty())
        return "undetermined";
    if (mdm.size() == 1)
        return mdm.front();
    return mdm;
}

} // namespace detail

inline ordered_json assessment_report(const SystemAssessment& a) {
    ordered_json j;
    j["system_verdict"] = system_verdict_name(a.verdict);
    j["verdict_time_s"] = a.verdict_time ? ordered_json(*a.verdict_time)
                                         : ordered_json(nullptr);
    j["leading_losp_s"] = a.leading_losp ? ordered_json(*a.leading_losp)
                                         : ordered_json(nullptr);
    j["lum"] = a.lum ? ordered_json(*a.lum) : ordered_json(nullptr);
    j["mdm"] = detail::mdm_json(a.mdm);
    ordered_json etas = ordered_json::array();
    for (const auto& [id, eta] : a.eta_sys) {
        ordered_json row;
        row["machine"] = id;
        row["eta"] = detail::eta_json(eta);
        etas.push_back(std::move(row));
    }
    j["eta_sys"] = std::move(etas);
    ordered_json events = ordered_json::array();
    for (const auto& ev : a.events) {
        ordered_json row;
        row["t"] = ev.t;
        row["machine"] = ev.machine_id;
        row["kind"] = event_kind_name(ev.kind);
        events.push_back(std::move(row));
    }
    j["events"] = std::move(events);
    j["critical_set"] = a.critical_set;
    return j;
}

inline ordered_json cct_report(const CctResult& r, double delta_t) {
    ordered_json j;
    j["cct_s"] = r.cct ? ordered_json(*r.cct) : ordered_json(nullptr);
    j["no_cct_in_range"] = r.no_cct_in_range;
    j["delta_t_s"] = delta_t;
    j["mdm"] = detail::mdm_json(r.mdm);
    j["lum"] = r.lum ? ordered_json(*r.lum) : ordered_json(nullptr);
    j["method"] = cct_method_name(r.method);
    if (r.fell_back_all_critical)
        j["fell_back_all_critical"] = true;
    ordered_json trace = ordered_json::array();
    for (const auto& p : r.trace) {
        ordered_json row;
        row["t_clear_s"] = p.t_clear;
        row["eta"] = p.eta ? ordered_json(*p.eta) : ordered_json(nullptr);
        row["unstable"] = p.unstable;
        trace.push_back(std::move(row));
    }
    j["margin_trace"] = std::move(trace);
    return j;
}

} // namespace tstab
