#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include <tstab/tstab.hpp>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitDisagreement = 4;

struct FaultSpec {
    int bus = 0;
    std::optional<double> t_clear;
    std::optional<std::pair<int, int>> trip;
    std::string raw;
};

/// Mini-grammar `bus=<id>,tclear=<s>[,trip=<from>-<to>]`.
FaultSpec parse_fault(const std::string& text) {
    FaultSpec spec;
    spec.raw = text;
    bool have_bus = false;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw tstab::InputError("fault spec: expected key=value, got '" + item +
                                    "'");
        const std::string key = item.substr(0, eq);
        const std::string val = item.substr(eq + 1);
        try {
            if (key == "bus") {
                spec.bus = std::stoi(val);
                have_bus = true;
            } else if (key == "tclear") {
                spec.t_clear = std::stod(val);
            } else if (key == "trip") {
                const auto dash = val.find('-', 1);
                if (dash == std::string::npos)
                    throw tstab::InputError(
                        "fault spec: trip wants <from>-<to>, got '" + val + "'");
                spec.trip = {std::stoi(val.substr(0, dash)),
                             std::stoi(val.substr(dash + 1))};
            } else {
                throw tstab::InputError("fault spec: unknown field '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw tstab::InputError("fault spec: field '" + key +
                                    "' has a non-numeric value '" + val + "'");
        } catch (const std::out_of_range&) {
            throw tstab::InputError("fault spec: field '" + key +
                                    "' value out of range");
        }
    }
    if (!have_bus)
        throw tstab::InputError("fault spec: missing 'bus' field");
    return spec;
}

struct Range {
    double t_start = 0.05;
    double t_max = 1.0;
    double dt = 0.01;
};

/// `t_start:t_max:dt`.
Range parse_range(const std::string& text) {
    Range r;
    std::stringstream ss(text);
    std::string a, b, c;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') ||
        !std::getline(ss, c, ':') || ss.rdbuf()->in_avail() != 0)
        throw tstab::InputError("range wants t_start:t_max:dt, got '" + text + "'");
    try {
        r.t_start = std::stod(a);
        r.t_max = std::stod(b);
        r.dt = std::stod(c);
    } catch (const std::exception&) {
        throw tstab::InputError("range wants three numbers, got '" + text + "'");
    }
    return r;
}

std::vector<int> parse_id_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw tstab::InputError("machine list: '" + item + "' is not an id");
        }
    }
    if (out.empty())
        throw tstab::InputError("machine list is empty");
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os)
        throw tstab::InputError("cannot write output file: " + path);
    return os;
}

void write_json(const std::string& path, const tstab::ordered_json& j) {
    auto os = open_out(path);
    os << j.dump(2) << "\n";
}

struct SimulateArgs {
    std::string case_path;
    std::string fault;
    double t_end = 5.0;
    double dt_sim = 1e-3;
    std::string prefix = "simulate";
};

int run_simulate(const SimulateArgs& a) {
    const auto net = tstab::load_case(a.case_path);
    const auto spec = parse_fault(a.fault);
    if (!spec.t_clear)
        throw tstab::InputError("fault spec: missing 'tclear' field");
    tstab::FaultScenario sc;
    sc.faulted_bus = spec.bus;
    sc.t_clear = *spec.t_clear;
    sc.tripped_branch = spec.trip;
    sc.t_end = a.t_end;

    const auto sys = tstab::build_staged_system(net, sc);
    tstab::SimulationOptions opt;
    opt.dt = a.dt_sim;
    const auto tr = tstab::simulate(sys, sc, opt);
    const auto coi = tstab::to_coi(tr);
    const auto series = tstab::kimbark_all(sys, tr, coi);

    tstab::RunManifest manifest;
    manifest.command = "simulate";
    manifest.case_path = a.case_path;
    manifest.fault_spec = a.fault;
    manifest.parameters["dt_sim_s"] = a.dt_sim;
    manifest.parameters["t_end_s"] = a.t_end;
    const std::string traj_path = a.prefix + "_trajectory.csv";
    const std::string coi_path = a.prefix + "_coi.csv";
    const std::string man_path = a.prefix + "_manifest.json";
    manifest.output_paths = {traj_path, coi_path, man_path};

    {
        auto os = open_out(traj_path);
        tstab::write_trajectory_csv(os, tr, coi, series);
    }
    {
        auto os = open_out(coi_path);
        tstab::write_coi_csv(os, tr, coi);
    }
    auto j = manifest.to_json();
    if (tr.blew_up) {
        j["blowup_time_s"] = tr.blowup_time;
        j["truncated"] = true;
    }
    if (tr.clear_snapped)
        j["t_clear_snapped_s"] = tr.t_clear;
    write_json(man_path, j);
    if (tr.blew_up) {
        std::cerr << "numeric error: state went non-finite at t = " << tr.blowup_time
                  << " s; partial trajectory retained\n";
        return kExitNumeric;
    }
    std::cout << "wrote " << traj_path << ", " << coi_path << ", " << man_path
              << "\n";
    return kExitOk;
}

struct AssessArgs {
    std::string case_path;
    std::string fault;
    double t_end = 5.0;
    double dt_sim = 1e-3;
    double alpha = 0.1;
    std::string monitor;
    std::string critical;
    std::string prefix = "assess";
};

int run_assess(const AssessArgs& a) {
    const auto net = tstab::load_case(a.case_path);
    const auto spec = parse_fault(a.fault);
    if (!spec.t_clear)
        throw tstab::InputError("fault spec: missing 'tclear' field");
    tstab::FaultScenario sc;
    sc.faulted_bus = spec.bus;
    sc.t_clear = *spec.t_clear;
    sc.tripped_branch = spec.trip;
    sc.t_end = a.t_end;

    tstab::MonitorConfig config;
    if (!a.monitor.empty()) {
        config.mode = tstab::MonitorMode::Subset;
        config.monitored = parse_id_list(a.monitor);
    }
    std::optional<std::vector<int>> critical_override;
    if (!a.critical.empty())
        critical_override = parse_id_list(a.critical);

    const auto sys = tstab::build_staged_system(net, sc);
    tstab::SimulationOptions opt;
    opt.dt = a.dt_sim;
    const auto tr = tstab::simulate(sys, sc, opt);
    const auto analysis =
        tstab::analyze_scenario(sys, tr, config, critical_override, a.alpha);

    tstab::RunManifest manifest;
    manifest.command = "assess";
    manifest.case_path = a.case_path;
    manifest.fault_spec = a.fault;
    manifest.parameters["dt_sim_s"] = a.dt_sim;
    manifest.parameters["t_end_s"] = a.t_end;
    manifest.parameters["alpha"] = a.alpha;
    if (!a.monitor.empty())
        manifest.monitor_spec = a.monitor;
    if (!a.critical.empty())
        manifest.parameters["critical_override"] = a.critical;

    const std::string report_path = a.prefix + "_report.json";
    manifest.output_paths.push_back(report_path);
    std::vector<std::pair<std::string, int>> kimbark_paths;
    for (const auto& v : analysis.assessment.verdicts) {
        const std::string p =
            a.prefix + "_kimbark_" + std::to_string(v.machine_id) + ".csv";
        kimbark_paths.emplace_back(p, v.machine_id);
        manifest.output_paths.push_back(p);
    }

    auto report = tstab::assessment_report(analysis.assessment);
    auto man = manifest.to_json();
    if (tr.blew_up) {
        man["blowup_time_s"] = tr.blowup_time;
        man["truncated"] = true;
    }
    report["manifest"] = std::move(man);
    write_json(report_path, report);
    for (const auto& [path, id] : kimbark_paths) {
        auto os = open_out(path);
        tstab::write_kimbark_csv(os, analysis.series[sys.machine_index(id)],
                                 sys.omega_sync);
    }
    std::cout << "verdict: "
              << tstab::system_verdict_name(analysis.assessment.verdict);
    if (analysis.assessment.verdict_time)
        std::cout << " at t = " << *analysis.assessment.verdict_time << " s";
    std::cout << "; report: " << report_path << "\n";
    return kExitOk;
}

struct CctArgs {
    std::string case_path;
    std::string fault;
    std::string range = "0.05:1.00:0.01";
    double t_end = 10.0;
    double dt_sim = 1e-3;
    double alpha = 0.1;
    int warmup = 2;
    double tie_tol = 0.05;
    std::string policy = "mdm_only";
    std::string critical;
    bool verify = false;
    std::string prefix = "cct";
};

int run_cct(const CctArgs& a) {
    const auto net = tstab::load_case(a.case_path);
    const auto spec = parse_fault(a.fault);
    tstab::FaultLocation loc;
    loc.faulted_bus = spec.bus;
    loc.tripped_branch = spec.trip;

    const Range r = parse_range(a.range);
    tstab::CctConfig cfg;
    cfg.t_start = r.t_start;
    cfg.t_max = r.t_max;
    cfg.dt = r.dt;
    cfg.t_end = a.t_end;
    cfg.dt_sim = a.dt_sim;
    cfg.alpha = a.alpha;
    cfg.warmup = a.warmup;
    cfg.tie_tol = a.tie_tol;
    if (a.policy == "mdm_only")
        cfg.policy = tstab::MonitorPolicy::MdmOnly;
    else if (a.policy == "all_critical")
        cfg.policy = tstab::MonitorPolicy::AllCritical;
    else
        throw tstab::InputError("policy must be mdm_only or all_critical");
    if (!a.critical.empty())
        cfg.critical_override = parse_id_list(a.critical);

    const auto imeac = tstab::compute_cct_imeac(net, loc, cfg);
    auto report = tstab::cct_report(imeac, cfg.dt);

    bool disagree = false;
    if (a.verify) {
        const auto oracle = tstab::compute_cct_oracle(net, loc, cfg);
        report["oracle"] = tstab::cct_report(oracle, cfg.dt);
        bool agree = false;
        if (imeac.no_cct_in_range && oracle.no_cct_in_range)
            agree = true;
        else if (imeac.cct && oracle.cct)
            agree = std::abs(*imeac.cct - *oracle.cct) < cfg.dt / 2.0;
        report["agreement"] = agree;
        disagree = !agree;
    }

    tstab::RunManifest manifest;
    manifest.command = "cct";
    manifest.case_path = a.case_path;
    manifest.fault_spec = a.fault;
    manifest.parameters["range"] = a.range;
    manifest.parameters["t_end_s"] = a.t_end;
    manifest.parameters["dt_sim_s"] = a.dt_sim;
    manifest.parameters["alpha"] = a.alpha;
    manifest.parameters["warmup"] = a.warmup;
    manifest.parameters["tie_tol"] = a.tie_tol;
    manifest.parameters["policy"] = a.policy;
    manifest.parameters["verify"] = a.verify;
    if (!a.critical.empty())
        manifest.parameters["critical_override"] = a.critical;
    const std::string report_path = a.prefix + "_report.json";
    manifest.output_paths = {report_path};
    report["manifest"] = manifest.to_json();
    write_json(report_path, report);

    if (imeac.no_cct_in_range)
        std::cout << "no CCT in range; report: " << report_path << "\n";
    else
        std::cout << "cct = " << tstab::format_sig(*imeac.cct)
                  << " s; report: " << report_path << "\n";
    if (disagree) {
        std::cerr << "method disagreement: individual-machine scan and "
                     "time-domain bisection differ beyond the grid\n";
        return kExitDisagreement;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"transient stability toolkit: staged-fault swing simulation, "
                 "per-machine equal-area assessment, critical clearing times"};
    app.set_version_flag("--version", TSTAB_VERSION);
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand(
        "simulate", "integrate one staged fault and export trajectory CSVs");
    cmd_sim->add_option("--case", sim.case_path, "case JSON file")->required();
    cmd_sim->add_option("--fault", sim.fault,
                        "bus=<id>,tclear=<s>[,trip=<from>-<to>]")
        ->required();
    cmd_sim->add_option("--tend", sim.t_end, "simulation horizon, s");
    cmd_sim->add_option("--dt", sim.dt_sim, "integration step, s");
    cmd_sim->add_option("--out-prefix", sim.prefix, "output path prefix");

    AssessArgs ass;
    auto* cmd_ass = app.add_subcommand(
        "assess", "per-machine equal-area assessment of one staged fault");
    cmd_ass->add_option("--case", ass.case_path, "case JSON file")->required();
    cmd_ass->add_option("--fault", ass.fault,
                        "bus=<id>,tclear=<s>[,trip=<from>-<to>]")
        ->required();
    cmd_ass->add_option("--tend", ass.t_end, "simulation horizon, s");
    cmd_ass->add_option("--dt", ass.dt_sim, "integration step, s");
    cmd_ass->add_option("--alpha", ass.alpha,
                        "critical-set kinetic-energy fraction");
    cmd_ass->add_option("--monitor", ass.monitor,
                        "monitor only these machines (comma-separated ids)");
    cmd_ass->add_option("--critical", ass.critical,
                        "critical-set override (comma-separated ids)");
    cmd_ass->add_option("--out-prefix", ass.prefix, "output path prefix");

    CctArgs cct;
    auto* cmd_cct = app.add_subcommand(
        "cct", "critical clearing time by minimum-margin machine scan");
    cmd_cct->add_option("--case", cct.case_path, "case JSON file")->required();
    cmd_cct->add_option("--fault", cct.fault, "bus=<id>[,trip=<from>-<to>]")
        ->required();
    cmd_cct->add_option("--range", cct.range, "clearing-time grid t_start:t_max:dt");
    cmd_cct->add_option("--tend", cct.t_end, "simulation horizon per trial, s");
    cmd_cct->add_option("--dt-sim", cct.dt_sim, "integration step, s");
    cmd_cct->add_option("--alpha", cct.alpha,
                        "critical-set kinetic-energy fraction");
    cmd_cct->add_option("--warmup", cct.warmup,
                        "stable iterations fixing the scan target");
    cmd_cct->add_option("--tie-tol", cct.tie_tol,
                        "margin distance treated as a tie");
    cmd_cct->add_option("--policy", cct.policy, "mdm_only or all_critical");
    cmd_cct->add_option("--critical", cct.critical,
                        "critical-set override (comma-separated ids)");
    cmd_cct->add_flag("--verify", cct.verify,
                      "cross-check with time-domain bisection");
    cmd_cct->add_option("--out-prefix", cct.prefix, "output path prefix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (cmd_sim->parsed())
            return run_simulate(sim);
        if (cmd_ass->parsed())
            return run_assess(ass);
        return run_cct(cct);
    } catch (const tstab::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const tstab::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
}
