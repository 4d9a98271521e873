#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tstab/assessment.hpp"
#include "tstab/coi.hpp"
#include "tstab/equal_area.hpp"
#include "tstab/errors.hpp"
#include "tstab/reduction.hpp"
#include "tstab/simulation.hpp"

namespace tstab {

/// Fault position independent of timing, for clearing-time searches.
struct FaultLocation {
    int faulted_bus = 0;
    std::optional<std::pair<int, int>> tripped_branch;

    FaultScenario scenario(double t_clear, double t_end) const {
        FaultScenario sc;
        sc.faulted_bus = faulted_bus;
        sc.tripped_branch = tripped_branch;
        sc.t_clear = t_clear;
        sc.t_end = t_end;
        return sc;
    }
};

enum class MonitorPolicy { MdmOnly, AllCritical };

struct CctConfig {
    double t_start = 0.05;
    double t_max = 1.0;
    double dt = 0.01; ///< clearing-time grid step
    int warmup = 2;   ///< stable iterations used to fix the MDM
    MonitorPolicy policy = MonitorPolicy::MdmOnly;
    /// Machines within this distance of the minimum warmup margin are all
    /// retained as MDMs.
    double tie_tol = 0.05;
    double t_end = 10.0;  ///< simulation horizon per trial
    double dt_sim = 1e-3; ///< integration step per trial
    double alpha = 0.1;   ///< critical-set kinetic-energy fraction
    std::optional<std::vector<int>> critical_override;

    void validate() const {
        if (!(t_start >= 0.0))
            throw InputError("clearing-time range start must be nonnegative");
        if (!(t_start < t_max))
            throw InputError("clearing-time range start must precede its end");
        if (!(dt > 0.0))
            throw InputError("clearing-time grid step must be positive");
        if (warmup < 1)
            throw InputError("at least one warmup iteration is required");
        if (!(t_end > t_max))
            throw InputError("simulation horizon must exceed the largest "
                             "clearing time");
    }
};

enum class CctMethod { ImeacMdm, OracleBisection };

inline const char* cct_method_name(CctMethod m) {
    return m == CctMethod::ImeacMdm ? "imeac_mdm" : "oracle_bisection";
}

struct CctTracePoint {
    double t_clear = 0.0;
    /// Minimum monitored margin at this clearing time; absent for oracle
    /// probes and non-event trials.
    std::optional<double> eta;
    bool unstable = false;
};

struct CctResult {
    CctMethod method = CctMethod::ImeacMdm;
    std::optional<double> cct;
    bool no_cct_in_range = false;
    std::vector<int> mdm; ///< empty when undetermined
    std::optional<int> lum;
    std::vector<CctTracePoint> trace; ///< ascending t_clear
    bool fell_back_all_critical = false;
};

namespace detail {

struct CctTrial {
    bool unstable = false;
    std::optional<int> first_dlp_machine;
    double first_dlp_time = 0.0;
    std::optional<double> eta_min;
    /// Stable machines with genuine (uncapped) margins within tie_tol of
    /// the minimum; empty when every margin is capped or missing.
    std::vector<int> mdm_candidates;
};

/// Simulates one clearing time and analyzes the monitored machines.
/// `monitored` empty means all critical machines per the configured rule.
inline CctTrial run_imeac_trial(const StagedSystem& sys, double t_clear,
                                const CctConfig& cfg,
                                const std::vector<int>& monitored) {
    FaultScenario sc;
    sc.t_clear = t_clear;
    sc.t_end = cfg.t_end;
    SimulationOptions opt;
    opt.dt = cfg.dt_sim;
    const Trajectory tr = simulate(sys, sc, opt);
    const CoiFrame coi = to_coi(tr);
    const auto series = kimbark_all(sys, tr, coi);

    std::vector<int> ids = monitored;
    if (ids.empty()) {
        if (cfg.critical_override) {
            ids = identify_critical_machines(tr, coi, cfg.critical_override, cfg.alpha);
        } else {
            try {
                ids = identify_critical_machines(tr, coi, {}, cfg.alpha);
            } catch (const InputError&) {
                return {}; // nothing accelerated: trivially stable trial
            }
        }
    }

    CctTrial trial;
    std::vector<std::pair<double, int>> dlp_times;
    double min_eta = 0.0;
    bool have_eta = false;
    double min_genuine = 0.0;
    bool have_genuine = false;
    std::vector<std::pair<int, double>> genuine;
    for (int id : ids) {
        const MachineVerdict v = analyze_machine(series[sys.machine_index(id)]);
        if (v.event.kind == EventKind::Dlp)
            dlp_times.emplace_back(v.event.t_event, v.machine_id);
        if (v.eta) {
            if (!have_eta || *v.eta < min_eta)
                min_eta = *v.eta;
            have_eta = true;
            if (v.status == MachineStatus::Stable && !v.capped) {
                genuine.emplace_back(v.machine_id, *v.eta);
                if (!have_genuine || *v.eta < min_genuine)
                    min_genuine = *v.eta;
                have_genuine = true;
            }
        }
    }
    if (have_eta)
        trial.eta_min = min_eta;
    if (!dlp_times.empty()) {
        trial.unstable = true;
        auto first = *std::min_element(dlp_times.begin(), dlp_times.end());
        trial.first_dlp_time = first.first;
        trial.first_dlp_machine = first.second;
        return trial;
    }
    if (have_genuine) {
        for (const auto& [id, eta] : genuine)
            if (eta <= min_genuine + cfg.tie_tol)
                trial.mdm_candidates.push_back(id);
        std::sort(trial.mdm_candidates.begin(), trial.mdm_candidates.end());
    }
    return trial;
}

} // namespace detail

/// Clearing-time search per the individual-machine method: a few stable
/// warmup iterations with every critical machine monitored fix the MDM,
/// then the scan continues monitoring the MDM alone until its margin goes
/// negative. The CCT is the last grid point before the sign change. A
/// warmup MDM flip falls back to monitoring all critical machines.
inline CctResult compute_cct_imeac(const StagedSystem& sys, const CctConfig& cfg) {
    cfg.validate();
    CctResult res;
    res.method = CctMethod::ImeacMdm;
    const long n_grid = std::lround((cfg.t_max - cfg.t_start) / cfg.dt);
    auto t_of = [&](long k) { return cfg.t_start + static_cast<double>(k) * cfg.dt; };

    std::vector<std::vector<int>> warmup_sets;
    std::vector<int> last_candidates;
    std::vector<int> scan_monitor; ///< empty = all critical
    bool warmed_up = false;

    for (long k = 0; k <= n_grid; ++k) {
        const double t = t_of(k);
        const detail::CctTrial trial =
            detail::run_imeac_trial(sys, t, cfg, scan_monitor);
        res.trace.push_back({t, trial.eta_min, trial.unstable});
        if (trial.unstable) {
            if (k == 0)
                throw InputError("already unstable at the range start; lower it");
            res.cct = t_of(k - 1);
            res.lum = trial.first_dlp_machine;
            if (res.mdm.empty())
                res.mdm = warmup_sets.empty() ? last_candidates : warmup_sets.back();
            return res;
        }
        if (!trial.mdm_candidates.empty())
            last_candidates = trial.mdm_candidates;
        if (!warmed_up) {
            if (!trial.mdm_candidates.empty())
                warmup_sets.push_back(trial.mdm_candidates);
            if (static_cast<int>(warmup_sets.size()) >= cfg.warmup) {
                warmed_up = true;
                bool agree = true;
                for (const auto& s : warmup_sets)
                    if (s != warmup_sets.front())
                        agree = false;
                if (!agree) {
                    res.fell_back_all_critical = true;
                } else {
                    res.mdm = warmup_sets.front();
                    if (cfg.policy == MonitorPolicy::MdmOnly)
                        scan_monitor = res.mdm;
                }
            }
        }
    }
    res.no_cct_in_range = true;
    if (res.mdm.empty())
        res.mdm = last_candidates;
    return res;
}

inline CctResult compute_cct_imeac(const NetworkCase& net, const FaultLocation& loc,
                                   const CctConfig& cfg) {
    cfg.validate();
    return compute_cct_imeac(build_staged_system(net, loc.scenario(cfg.t_start, cfg.t_end)),
                             cfg);
}

/// Independent clearing-time search: full time-domain run per trial,
/// classified by trajectory divergence, bisected on the same grid.
inline CctResult compute_cct_oracle(const StagedSystem& sys, const CctConfig& cfg) {
    cfg.validate();
    CctResult res;
    res.method = CctMethod::OracleBisection;
    const long n_grid = std::lround((cfg.t_max - cfg.t_start) / cfg.dt);
    auto t_of = [&](long k) { return cfg.t_start + static_cast<double>(k) * cfg.dt; };

    SimulationOptions opt;
    opt.dt = cfg.dt_sim;
    auto classify = [&](long k) {
        FaultScenario sc;
        sc.t_clear = t_of(k);
        sc.t_end = cfg.t_end;
        const Trajectory tr = simulate(sys, sc, opt);
        const bool unstable = divergence_verdict(tr).unstable;
        res.trace.push_back({t_of(k), std::nullopt, unstable});
        return unstable;
    };

    if (classify(0))
        throw InputError("already unstable at the range start; lower it");
    if (!classify(n_grid)) {
        res.no_cct_in_range = true;
        std::sort(res.trace.begin(), res.trace.end(),
                  [](const CctTracePoint& a, const CctTracePoint& b) {
                      return a.t_clear < b.t_clear;
                  });
        return res;
    }
    long lo = 0, hi = n_grid;
    while (hi - lo > 1) {
        const long mid = lo + (hi - lo) / 2;
        if (classify(mid))
            hi = mid;
        else
            lo = mid;
    }
    res.cct = t_of(lo);
    std::sort(res.trace.begin(), res.trace.end(),
              [](const CctTracePoint& a, const CctTracePoint& b) {
                  return a.t_clear < b.t_clear;
              });
    return res;
}

inline CctResult compute_cct_oracle(const NetworkCase& net, const FaultLocation& loc,
                                    const CctConfig& cfg) {
    cfg.validate();
    return compute_cct_oracle(build_staged_system(net, loc.scenario(cfg.t_start, cfg.t_end)),
                              cfg);
}

} // namespace tstab
