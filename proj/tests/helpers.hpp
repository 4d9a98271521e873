#pragma once

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <tstab/tstab.hpp>

#ifndef TSTAB_CASES_DIR
#define TSTAB_CASES_DIR "cases"
#endif

namespace testutil {

inline std::string case_path(const std::string& name) {
    return std::string(TSTAB_CASES_DIR) + "/" + name;
}

/// Single machine against a pseudo-infinite bus (a second machine with
/// enormous inertia), wired directly in machine space so the fault-on
/// electrical power is exactly zero. The closed-form equal-area critical
/// angle and clearing time follow from the constants.
struct Smib {
    tstab::StagedSystem sys;
    double pm = 0.9;
    double pmax = 1.8;
    double h = 5.0;

    double m() const { return 2.0 * h / sys.omega_sync; }
    double delta0() const { return std::asin(pm / pmax); }
    double delta_max() const { return M_PI - delta0(); }
    double delta_crit() const {
        return std::acos((pm / pmax) * (delta_max() - delta0()) -
                         std::cos(delta0()));
    }
    /// Constant-acceleration sweep from delta0 to the critical angle.
    double t_crit() const {
        return std::sqrt(2.0 * m() * (delta_crit() - delta0()) / pm);
    }
};

inline Smib make_smib() {
    Smib s;
    tstab::StagedSystem sys;
    sys.machine_ids = {1, 2};
    sys.omega_sync = 2.0 * M_PI * 60.0;
    sys.inertia.resize(2);
    sys.inertia << 2.0 * s.h / sys.omega_sync, 1e9;
    sys.damping = Eigen::VectorXd::Zero(2);
    sys.mech_power.resize(2);
    sys.mech_power << s.pm, -s.pm;
    sys.emf = Eigen::VectorXd::Ones(2);
    sys.delta0.resize(2);
    sys.delta0 << std::asin(s.pm / s.pmax), 0.0;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, 2);
    Eigen::MatrixXd b(2, 2);
    b << -s.pmax, s.pmax, s.pmax, -s.pmax;
    sys.prefault = {tstab::Stage::Prefault, g, b};
    sys.fault_on = {tstab::Stage::FaultOn, Eigen::MatrixXd::Zero(2, 2),
                    Eigen::MatrixXd::Zero(2, 2)};
    sys.post_fault = {tstab::Stage::PostFault, g, b};
    s.sys = sys;
    return s;
}

/// Random connected case with one machine per bus and a consistent
/// operating point: Pm is set to the exact net injection at each bus with
/// loads folded in as shunts, so the unfaulted system sits at equilibrium.
inline tstab::NetworkCase random_case(std::mt19937& rng, int n_machines) {
    std::uniform_real_distribution<double> vm_d(0.98, 1.05);
    std::uniform_real_distribution<double> va_d(-0.25, 0.25);
    std::uniform_real_distribution<double> x_d(0.15, 0.6);
    std::uniform_real_distribution<double> b_d(0.0, 0.05);
    std::uniform_real_distribution<double> h_d(2.0, 8.0);
    std::uniform_real_distribution<double> xdp_d(0.05, 0.3);
    std::uniform_real_distribution<double> p_d(0.0, 1.0);
    std::uniform_real_distribution<double> q_d(-0.2, 0.4);
    std::uniform_int_distribution<int> coin(0, 1);

    tstab::NetworkCase c;
    c.base_mva = 100.0;
    c.frequency_hz = 60.0;
    for (int i = 1; i <= n_machines; ++i)
        c.buses.push_back({i, vm_d(rng), va_d(rng)});

    for (int i = 2; i <= n_machines; ++i) {
        std::uniform_int_distribution<int> pick(1, i - 1);
        const double x = x_d(rng);
        c.branches.push_back({pick(rng), i, 0.05 * x, x, b_d(rng), true});
    }
    const int extras = n_machines / 2;
    for (int e = 0; e < extras; ++e) {
        std::uniform_int_distribution<int> pick(1, n_machines);
        const int a = pick(rng);
        const int b = pick(rng);
        if (a == b)
            continue;
        const double x = x_d(rng);
        c.branches.push_back({a, b, 0.05 * x, x, b_d(rng), true});
    }
    for (int i = 1; i <= n_machines; ++i)
        if (coin(rng))
            c.loads.push_back({i, p_d(rng), q_d(rng)});

    c.reindex();
    const auto y = tstab::build_admittance(c);
    Eigen::VectorXcd v(n_machines);
    for (int k = 0; k < n_machines; ++k)
        v(k) = std::polar(c.buses[k].vm, c.buses[k].va);
    const Eigen::VectorXcd inj = y * v;
    for (int i = 1; i <= n_machines; ++i) {
        tstab::Generator g;
        g.bus = i;
        g.h = h_d(rng);
        g.xd_prime = xdp_d(rng);
        g.d = 0.0;
        g.pm = (v(i - 1) * std::conj(inj(i - 1))).real();
        c.generators.push_back(g);
    }
    c.validate();
    return c;
}

/// A fault at a bus whose machine actually produces power, so the
/// disturbance accelerates somebody.
inline tstab::FaultScenario random_fault(std::mt19937& rng,
                                         const tstab::NetworkCase& net,
                                         double t_end) {
    std::vector<int> exporting;
    for (const auto& g : net.generators)
        if (g.pm > 0.2)
            exporting.push_back(g.bus);
    if (exporting.empty())
        for (const auto& g : net.generators)
            exporting.push_back(g.bus);
    std::uniform_int_distribution<std::size_t> pick(0, exporting.size() - 1);
    std::uniform_real_distribution<double> tc_d(0.05, 0.45);
    tstab::FaultScenario sc;
    sc.faulted_bus = exporting[pick(rng)];
    sc.t_clear = std::round(tc_d(rng) * 1000.0) / 1000.0;
    sc.t_end = t_end;
    return sc;
}

/// Composite Simpson quadrature, exact for polynomials of degree three.
template <typename F>
double simpson(F f, double a, double b, int panels) {
    const double h = (b - a) / (2 * panels);
    double sum = f(a) + f(b);
    for (int i = 1; i < 2 * panels; ++i)
        sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

} // namespace testutil
