#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tstab/coi.hpp"
#include "tstab/equal_area.hpp"
#include "tstab/errors.hpp"
#include "tstab/simulation.hpp"

namespace tstab {

enum class MonitorMode { AllCritical, Subset };

struct MonitorConfig {
    MonitorMode mode = MonitorMode::AllCritical;
    /// Monitored machine ids in subset mode; must be a nonempty subset of
    /// the critical set.
    std::vector<int> monitored;
};

enum class SystemVerdict { Stable, Unstable, Undetermined };

inline const char* system_verdict_name(SystemVerdict v) {
    switch (v) {
    case SystemVerdict::Stable: return "stable";
    case SystemVerdict::Unstable: return "unstable";
    default: return "undetermined";
    }
}

struct AssessmentEvent {
    double t = 0.0;
    int machine_id = 0;
    EventKind kind = EventKind::NoneByHorizon;
};

struct SystemAssessment {
    std::vector<int> critical_set; ///< ascending machine id
    /// Verdicts of the monitored machines, ascending machine id.
    std::vector<MachineVerdict> verdicts;
    /// Margin vector over the critical set, ascending machine id; absent
    /// margin means the machine was not monitored or yielded no margin.
    std::vector<std::pair<int, std::optional<double>>> eta_sys;
    /// Minimum-margin machine(s); empty while any critical margin is missing.
    std::vector<int> mdm;
    std::optional<int> lum;
    std::optional<double> leading_losp;
    std::optional<double> verdict_time;
    SystemVerdict verdict = SystemVerdict::Undetermined;
    std::vector<AssessmentEvent> events; ///< time ordered, monitored machines

    bool mdm_determined() const { return !mdm.empty(); }
};

/// Selects the machines worth per-machine analysis after clearing: positive
/// COI-relative speed and at least `alpha` of the largest COI kinetic
/// energy. An override list is taken verbatim. The result is ascending.
inline std::vector<int>
identify_critical_machines(const Trajectory& tr, const CoiFrame& coi,
                           const std::optional<std::vector<int>>& override_ids = {},
                           double alpha = 0.1) {
    if (override_ids) {
        std::vector<int> out = *override_ids;
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        if (out.empty())
            throw InputError("critical-machine override list is empty");
        for (int id : out) {
            if (std::find(tr.machine_ids.begin(), tr.machine_ids.end(), id) ==
                tr.machine_ids.end())
                throw InputError("critical-machine override names unknown machine " +
                                 std::to_string(id));
        }
        return out;
    }
    const int k = std::min(tr.clear_index, tr.samples() - 1);
    const int n = tr.size();
    std::vector<double> ke(n);
    double ke_max = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = coi.omega_rel(i, k);
        ke[i] = 0.5 * tr.inertia(i) * w * w;
        ke_max = std::max(ke_max, ke[i]);
    }
    std::vector<int> out;
    for (int i = 0; i < n; ++i) {
        if (coi.omega_rel(i, k) > 0.0 && ke[i] >= alpha * ke_max && ke[i] > 0.0)
            out.push_back(tr.machine_ids[i]);
    }
    std::sort(out.begin(), out.end());
    if (out.empty())
        throw InputError("no machine accelerated at clearing; nothing to assess");
    return out;
}

/// Minimum-margin machine(s) over a complete critical-set margin vector.
/// Exact ties are all returned.
inline std::vector<int> mdm_of(const std::vector<std::pair<int, double>>& margins) {
    if (margins.empty())
        throw InputError("MDM undefined over an empty margin vector");
    double lo = margins.front().second;
    for (const auto& [id, eta] : margins)
        lo = std::min(lo, eta);
    std::vector<int> out;
    for (const auto& [id, eta] : margins)
        if (eta == lo)
            out.push_back(id);
    std::sort(out.begin(), out.end());
    return out;
}

/// Folds per-machine verdicts into the system judgment. The verdict follows
/// the unity principle: unstable the instant any monitored machine reaches
/// a DLP, stable once every monitored machine has passed its DSP. MDM is
/// left undetermined while any critical-set margin is missing, which is
/// always the case under subset monitoring of a proper subset.
inline SystemAssessment assess_system(const std::vector<MachineVerdict>& verdicts,
                                      const std::vector<int>& critical_set,
                                      const MonitorConfig& config = {}) {
    SystemAssessment out;
    out.critical_set = critical_set;
    std::sort(out.critical_set.begin(), out.critical_set.end());

    std::vector<int> monitored;
    if (config.mode == MonitorMode::AllCritical) {
        monitored = out.critical_set;
    } else {
        monitored = config.monitored;
        std::sort(monitored.begin(), monitored.end());
        monitored.erase(std::unique(monitored.begin(), monitored.end()),
                        monitored.end());
        if (monitored.empty())
            throw InputError("subset monitoring needs a nonempty machine list");
        for (int id : monitored) {
            if (!std::binary_search(out.critical_set.begin(), out.critical_set.end(),
                                    id))
                throw InputError("monitored machine " + std::to_string(id) +
                                 " is not in the critical set");
        }
    }

    std::map<int, const MachineVerdict*> by_id;
    for (const auto& v : verdicts)
        by_id[v.machine_id] = &v;
    for (int id : monitored) {
        auto it = by_id.find(id);
        if (it == by_id.end())
            throw InputError("no analysis available for monitored machine " +
                             std::to_string(id));
        out.verdicts.push_back(*it->second);
    }

    for (const auto& v : out.verdicts) {
        if (v.event.kind == EventKind::NoneByHorizon)
            continue;
        out.events.push_back({v.event.t_event, v.machine_id, v.event.kind});
    }
    std::sort(out.events.begin(), out.events.end(),
              [](const AssessmentEvent& a, const AssessmentEvent& b) {
                  return a.t != b.t ? a.t < b.t : a.machine_id < b.machine_id;
              });

    bool any_undetermined = false;
    for (const auto& v : out.verdicts)
        if (v.status == MachineStatus::Undetermined)
            any_undetermined = true;
    for (const auto& ev : out.events) {
        if (ev.kind == EventKind::Dlp) {
            out.verdict = SystemVerdict::Unstable;
            out.verdict_time = ev.t;
            out.leading_losp = ev.t;
            out.lum = ev.machine_id;
            break;
        }
    }
    if (out.verdict != SystemVerdict::Unstable) {
        if (any_undetermined) {
            out.verdict = SystemVerdict::Undetermined;
        } else {
            out.verdict = SystemVerdict::Stable;
            double last_dsp = 0.0;
            for (const auto& ev : out.events)
                last_dsp = std::max(last_dsp, ev.t);
            out.verdict_time = last_dsp;
        }
    }

    std::vector<std::pair<int, double>> complete;
    bool all_present = true;
    for (int id : out.critical_set) {
        std::optional<double> eta;
        auto it = by_id.find(id);
        const bool is_monitored =
            std::binary_search(monitored.begin(), monitored.end(), id);
        if (is_monitored && it != by_id.end() && it->second->eta)
            eta = it->second->eta;
        out.eta_sys.emplace_back(id, eta);
        if (eta)
            complete.emplace_back(id, *eta);
        else
            all_present = false;
    }
    if (all_present)
        out.mdm = mdm_of(complete);
    return out;
}

/// Trajectory-divergence classification used as the independent stability
/// oracle: unstable when the synchronous-frame angle spread exceeds 2π and
/// is still growing at the end of the horizon, or when the integration
/// blew up outright.
struct DivergenceVerdict {
    bool unstable = false;
    double spread_end = 0.0;
    bool growing = false;
};

inline DivergenceVerdict divergence_verdict(const Trajectory& tr) {
    DivergenceVerdict out;
    if (tr.blew_up) {
        out.unstable = true;
        out.growing = true;
        out.spread_end = std::numeric_limits<double>::infinity();
        return out;
    }
    const int last = tr.samples() - 1;
    if (last < 1)
        return out;
    auto spread = [&](int k) {
        return tr.delta.col(k).maxCoeff() - tr.delta.col(k).minCoeff();
    };
    const int lookback = std::max(1, static_cast<int>(std::lround(0.05 / tr.dt)));
    const int ref = std::max(0, last - lookback);
    out.spread_end = spread(last);
    out.growing = out.spread_end > spread(ref);
    out.unstable = out.spread_end > 2.0 * M_PI && out.growing;
    return out;
}

/// One-call driver: COI transform, per-machine analysis of the monitored
/// machines, system fold. Returns the assessment plus the series it used.
struct ScenarioAnalysis {
    CoiFrame coi;
    std::vector<KimbarkSeries> series; ///< every machine, trajectory order
    std::vector<int> critical_set;
    SystemAssessment assessment;
};

inline ScenarioAnalysis
analyze_scenario(const StagedSystem& sys, const Trajectory& tr,
                 const MonitorConfig& config = {},
                 const std::optional<std::vector<int>>& critical_override = {},
                 double alpha = 0.1) {
    ScenarioAnalysis out;
    out.coi = to_coi(tr);
    out.series = kimbark_all(sys, tr, out.coi);
    out.critical_set = identify_critical_machines(tr, out.coi, critical_override, alpha);
    std::vector<int> monitored =
        config.mode == MonitorMode::AllCritical ? out.critical_set : config.monitored;
    std::vector<MachineVerdict> verdicts;
    for (int id : monitored) {
        const int idx = sys.machine_index(id);
        verdicts.push_back(analyze_machine(out.series[idx]));
    }
    out.assessment = assess_system(verdicts, out.critical_set, config);
    return out;
}

} // namespace tstab
