#include "helpers.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int failures = 0;
std::string bin;

#define CHECK(cond)                                                            \
    do {                                                                       \
        if (!(cond)) {                                                         \
            ++failures;                                                        \
            std::cerr << "FAIL " << __FILE__ << ":" << __LINE__ << "  " #cond  \
                      << "\n";                                                 \
        }                                                                      \
    } while (0)

int run_cmd(const std::string& args) {
    const std::string cmd =
        bin + " " + args + " > cli_out/stdout.txt 2> cli_out/stderr.txt";
    const int rc = std::system(cmd.c_str());
    if (rc == -1)
        return -1;
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream is(path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(is, line))
        out.push_back(line);
    return out;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(item);
    return out;
}

json load_json(const std::string& path) {
    std::ifstream is(path);
    CHECK(is.good());
    if (!is.good())
        return json::object();
    json j = json::parse(is, nullptr, false);
    CHECK(!j.is_discarded());
    if (j.is_discarded())
        return json::object();
    return j;
}

void test_version_and_usage() {
    CHECK(run_cmd("--version") == 0);
    CHECK(run_cmd("") == 2);
    CHECK(run_cmd("simulate") == 2);
    CHECK(run_cmd("frobnicate") == 2);
}

void test_simulate_outputs() {
    const std::string c = testutil::case_path("three_machine.json");
    const int rc = run_cmd("simulate --case " + c +
                           " --fault bus=7,tclear=0.1,trip=5-7 --tend 1.0 "
                           "--out-prefix cli_out/sim");
    CHECK(rc == 0);
    const auto lines = read_lines("cli_out/sim_trajectory.csv");
    CHECK(lines.size() == 1 + 101 + 901);
    CHECK(lines.front() ==
          "t,delta_1,delta_2,delta_3,omega_1,omega_2,omega_3,"
          "theta_1,theta_2,theta_3,ftilde_1,ftilde_2,ftilde_3");
    CHECK(split(lines[1])[0] == "0");
    const auto last = split(lines.back());
    CHECK(std::abs(std::stod(last[0]) - 1.0) < 1e-12);
    CHECK(fs::exists("cli_out/sim_coi.csv"));

    const json man = load_json("cli_out/sim_manifest.json");
    CHECK(man["command"] == "simulate");
    CHECK(man["outputs"].size() == 3);
    CHECK(man.contains("version"));
    CHECK(man.contains("timestamp"));
    CHECK(!man.contains("truncated"));
}

void test_no_fault_equilibrium() {
    const std::string c = testutil::case_path("three_machine.json");
    const int rc = run_cmd("simulate --case " + c +
                           " --fault bus=7,tclear=0.0 --tend 1.0 "
                           "--out-prefix cli_out/eq");
    CHECK(rc == 0);
    const auto lines = read_lines("cli_out/eq_trajectory.csv");
    double max_omega = 0.0;
    for (size_t i = 1; i < lines.size(); ++i) {
        const auto cols = split(lines[i]);
        for (int j = 4; j <= 6; ++j)
            max_omega = std::max(max_omega, std::abs(std::stod(cols[j])));
    }
    CHECK(max_omega <= 1e-9);
}

void test_assess_stable_and_unstable() {
    const std::string c = testutil::case_path("three_machine.json");
    int rc = run_cmd("assess --case " + c +
                     " --fault bus=7,tclear=0.08,trip=5-7 --tend 5.0 "
                     "--out-prefix cli_out/as");
    CHECK(rc == 0);
    const json rep = load_json("cli_out/as_report.json");
    CHECK(rep["system_verdict"] == "stable");
    CHECK(rep["lum"].is_null());
    CHECK(rep["leading_losp_s"].is_null());
    CHECK(rep["verdict_time_s"].is_number());
    CHECK(rep["eta_sys"].is_array());
    CHECK(!rep["eta_sys"].empty());
    for (const auto& row : rep["eta_sys"]) {
        CHECK(row.contains("machine"));
        CHECK(row["eta"].is_number() || row["eta"] == "N/A");
    }
    for (const auto& id : rep["critical_set"]) {
        const std::string p =
            "cli_out/as_kimbark_" + std::to_string(id.get<int>()) + ".csv";
        const auto kl = read_lines(p);
        CHECK(kl.size() > 2);
        CHECK(kl.front() == "t,theta_rad,f_pu,omega_pu");
    }
    double prev = -1.0;
    for (const auto& ev : rep["events"]) {
        CHECK(ev["kind"] == "DSP" || ev["kind"] == "DLP");
        CHECK(ev["t"].get<double>() >= prev);
        prev = ev["t"].get<double>();
    }

    rc = run_cmd("assess --case " + c +
                 " --fault bus=7,tclear=0.30,trip=5-7 --tend 5.0 "
                 "--out-prefix cli_out/au");
    CHECK(rc == 0);
    const json rep2 = load_json("cli_out/au_report.json");
    CHECK(rep2["system_verdict"] == "unstable");
    CHECK(rep2["lum"].is_number());
    CHECK(rep2["leading_losp_s"].is_number());
    CHECK(rep2["verdict_time_s"] == rep2["leading_losp_s"]);
    double first_dlp = -1.0;
    for (const auto& ev : rep2["events"]) {
        if (ev["kind"] == "DLP") {
            first_dlp = ev["t"].get<double>();
            break;
        }
    }
    CHECK(first_dlp >= 0.0);
    CHECK(std::abs(rep2["verdict_time_s"].get<double>() - first_dlp) < 1e-12);
}

void test_assess_monitor_and_override() {
    const std::string c = testutil::case_path("three_machine.json");
    CHECK(run_cmd("assess --case " + c +
                  " --fault bus=7,tclear=0.08,trip=5-7 --monitor 99 "
                  "--out-prefix cli_out/bad") == 2);
    const int rc = run_cmd("assess --case " + c +
                           " --fault bus=7,tclear=0.08,trip=5-7 "
                           "--critical 1,2,3 --tend 5.0 --out-prefix cli_out/ov");
    CHECK(rc == 0);
    const json rep = load_json("cli_out/ov_report.json");
    CHECK(rep["critical_set"] == json::array({1, 2, 3}));
    CHECK(rep["eta_sys"].size() == 3);
}

void test_cct_verified() {
    const std::string c = testutil::case_path("three_machine.json");
    const int rc = run_cmd("cct --case " + c +
                           " --fault bus=7,trip=5-7 --range 0.05:0.4:0.01 "
                           "--tend 5.0 --verify --out-prefix cli_out/cc");
    CHECK(rc == 0 || rc == 4);
    const json rep = load_json("cli_out/cc_report.json");
    CHECK(rep["method"] == "imeac_mdm");
    CHECK(rep["delta_t_s"].get<double>() == 0.01);
    CHECK(rep["cct_s"].is_number());
    CHECK(rep["mdm"].is_number() || rep["mdm"].is_array());
    CHECK(rep.contains("oracle"));
    CHECK(rep["oracle"]["method"] == "oracle_bisection");
    CHECK(rep["agreement"].is_boolean());
    if (rc == 0)
        CHECK(rep["agreement"] == true);
    else
        CHECK(rep["agreement"] == false);
    double prev = -1.0;
    CHECK(!rep["margin_trace"].empty());
    for (const auto& p : rep["margin_trace"]) {
        CHECK(p["t_clear_s"].get<double>() > prev);
        prev = p["t_clear_s"].get<double>();
    }
}

void test_cct_out_of_range() {
    const std::string c = testutil::case_path("three_machine.json");
    const int rc = run_cmd("cct --case " + c +
                           " --fault bus=7,trip=5-7 --range 0.05:0.08:0.01 "
                           "--tend 5.0 --verify --out-prefix cli_out/cn");
    CHECK(rc == 0);
    const json rep = load_json("cli_out/cn_report.json");
    CHECK(rep["cct_s"].is_null());
    CHECK(rep["no_cct_in_range"] == true);
    CHECK(rep["agreement"] == true);
}

void test_input_errors() {
    const std::string c = testutil::case_path("three_machine.json");
    CHECK(run_cmd("simulate --case cli_out/nope.json "
                  "--fault bus=7,tclear=0.1 --out-prefix cli_out/x") == 2);
    CHECK(run_cmd("simulate --case " + c +
                  " --fault tclear=0.1 --out-prefix cli_out/x") == 2);
    CHECK(run_cmd("simulate --case " + c +
                  " --fault bus=7,tclear=abc --out-prefix cli_out/x") == 2);
    CHECK(run_cmd("simulate --case " + c +
                  " --fault bus=99,tclear=0.1 --out-prefix cli_out/x") == 2);
    CHECK(run_cmd("cct --case " + c +
                  " --fault bus=7 --range 0.2 --out-prefix cli_out/x") == 2);
    CHECK(run_cmd("cct --case " + c +
                  " --fault bus=7 --policy sideways --out-prefix cli_out/x") == 2);
}

void test_blowup_exit_code() {
    const char* tiny = R"({
      "base_mva": 100.0,
      "frequency_hz": 60.0,
      "buses": [{"id": 1, "vm": 1.0, "va": 0.0}, {"id": 2, "vm": 1.0, "va": 0.0}],
      "branches": [{"from": 1, "to": 2, "r": 0.0, "x": 0.5}],
      "generators": [
        {"bus": 1, "H": 1e-308, "xd_prime": 0.1, "Pm": 0.5},
        {"bus": 2, "H": 5.0, "xd_prime": 0.1, "Pm": -0.5}
      ],
      "loads": []
    })";
    {
        std::ofstream os("cli_out/tiny.json");
        os << tiny;
    }
    const int rc = run_cmd("simulate --case cli_out/tiny.json "
                           "--fault bus=1,tclear=0.2 --tend 1.0 "
                           "--out-prefix cli_out/bu");
    CHECK(rc == 3);
    const json man = load_json("cli_out/bu_manifest.json");
    CHECK(man["truncated"] == true);
    CHECK(man["blowup_time_s"].is_number());
    CHECK(fs::exists("cli_out/bu_trajectory.csv"));
}

void test_clear_snap_noted() {
    const std::string c = testutil::case_path("three_machine.json");
    const int rc = run_cmd("simulate --case " + c +
                           " --fault bus=7,tclear=0.1004999,trip=5-7 --tend 0.5 "
                           "--out-prefix cli_out/sn");
    CHECK(rc == 0);
    const json man = load_json("cli_out/sn_manifest.json");
    CHECK(man.contains("t_clear_snapped_s"));
    CHECK(std::abs(man["t_clear_snapped_s"].get<double>() - 0.100) < 1e-12);
}

} // namespace

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    CHECK(is.good());
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void test_manifest_determinism() {
    const std::string c = testutil::case_path("three_machine.json");
    const std::string cmd = "assess --case " + c +
                            " --fault bus=7,tclear=0.08,trip=5-7 --tend 5.0 "
                            "--out-prefix cli_out/dt";
    CHECK(run_cmd(cmd) == 0);
    std::vector<std::pair<std::string, std::string>> first;
    for (const auto& e : fs::directory_iterator("cli_out")) {
        const std::string name = e.path().filename().string();
        if (name.rfind("dt_", 0) == 0)
            first.emplace_back(name, slurp(e.path().string()));
    }
    CHECK(first.size() >= 2);
    CHECK(run_cmd(cmd) == 0);
    for (const auto& [name, bytes] : first) {
        const std::string again = slurp("cli_out/" + name);
        if (name == "dt_report.json") {
            json a = json::parse(bytes, nullptr, false);
            json b = json::parse(again, nullptr, false);
            CHECK(!a.is_discarded());
            CHECK(!b.is_discarded());
            if (a.is_discarded() || b.is_discarded())
                continue;
            a["manifest"].erase("timestamp");
            b["manifest"].erase("timestamp");
            CHECK(a.dump() == b.dump());
        } else {
            CHECK(again == bytes);
        }
    }
}

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: test_cli <path-to-tstab-binary>\n";
        return 2;
    }
    bin = argv[1];
    fs::create_directories("cli_out");

    test_version_and_usage();
    test_simulate_outputs();
    test_no_fault_equilibrium();
    test_assess_stable_and_unstable();
    test_assess_monitor_and_override();
    test_cct_verified();
    test_cct_out_of_range();
    test_input_errors();
    test_blowup_exit_code();
    test_clear_snap_noted();
    test_manifest_determinism();

    if (failures == 0) {
        std::cout << "test_cli: all checks passed\n";
        return 0;
    }
    std::cerr << "test_cli: " << failures << " check(s) failed\n";
    return 1;
}
