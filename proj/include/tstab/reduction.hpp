#pragma once

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tstab/errors.hpp"
#include "tstab/network.hpp"

namespace tstab {

enum class Stage { Prefault, FaultOn, PostFault };

inline const char* stage_name(Stage s) {
    switch (s) {
    case Stage::Prefault: return "prefault";
    case Stage::FaultOn: return "fault_on";
    default: return "post_fault";
    }
}

/// A staged disturbance: a solid three-phase fault applied at `faulted_bus`
/// at t = 0 and cleared at `t_clear`, optionally by tripping one branch.
struct FaultScenario {
    int faulted_bus = 0;
    double t_clear = 0.0;
    /// Branch removed at clearing, given as its (from, to) bus pair.
    std::optional<std::pair<int, int>> tripped_branch;
    double t_end = 5.0;
};

/// Admittance used to emulate a solid fault as a very large shunt.
inline constexpr double kFaultShunt = 1e6;

struct AdmittanceOptions {
    bool include_load_shunts = true;
    /// Bus id receiving the fault shunt, if any.
    std::optional<int> faulted_bus;
    /// Branch (from, to) excluded from the assembly, if any.
    std::optional<std::pair<int, int>> tripped_branch;
};

namespace detail {

inline bool branch_matches(const Branch& br, const std::pair<int, int>& key) {
    return (br.from == key.first && br.to == key.second) ||
           (br.from == key.second && br.to == key.first);
}

} // namespace detail

/// Assembles the bus admittance matrix for one network stage. Loads enter as
/// constant shunts y = (P - jQ)/|V|^2 at the prefault voltage; a fault enters
/// as a large shunt at the faulted bus; a tripped branch is left out.
inline Eigen::MatrixXcd build_admittance(const NetworkCase& net,
                                         const AdmittanceOptions& opt = {}) {
    using cd = std::complex<double>;
    const int n = static_cast<int>(net.buses.size());
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);

    bool trip_found = false;
    for (const auto& br : net.branches) {
        if (!br.in_service)
            continue;
        if (opt.tripped_branch && detail::branch_matches(br, *opt.tripped_branch) &&
            !trip_found) {
            trip_found = true;
            continue;
        }
        const int i = net.bus_index(br.from);
        const int j = net.bus_index(br.to);
        const cd ys = 1.0 / cd(br.r, br.x);
        const cd ysh(0.0, br.b / 2.0);
        y(i, i) += ys + ysh;
        y(j, j) += ys + ysh;
        y(i, j) -= ys;
        y(j, i) -= ys;
    }
    if (opt.tripped_branch && !trip_found)
        throw InputError("tripped branch " + std::to_string(opt.tripped_branch->first) +
                         "-" + std::to_string(opt.tripped_branch->second) +
                         " not found among in-service branches");

    if (opt.include_load_shunts) {
        for (const auto& l : net.loads) {
            const int k = net.bus_index(l.bus);
            const double vm = net.buses[k].vm;
            y(k, k) += cd(l.p, -l.q) / (vm * vm);
        }
    }
    if (opt.faulted_bus) {
        const int k = net.bus_index(*opt.faulted_bus);
        y(k, k) += cd(kFaultShunt, 0.0);
    }
    return y;
}

/// Eliminates all nodes not listed in `keep` by the Schur complement
///   Y_red = Y_kk - Y_ke Y_ee^{-1} Y_ek.
/// Throws NumericError naming the isolated nodes when the eliminated block
/// is singular (an island with no path to any kept node).
inline Eigen::MatrixXcd kron_reduce(const Eigen::MatrixXcd& y,
                                    const std::vector<int>& keep) {
    const int n = static_cast<int>(y.rows());
    std::vector<bool> kept(n, false);
    for (int k : keep) {
        if (k < 0 || k >= n)
            throw InputError("kron_reduce: keep index out of range");
        if (kept[k])
            throw InputError("kron_reduce: duplicate keep index");
        kept[k] = true;
    }
    std::vector<int> elim;
    for (int i = 0; i < n; ++i)
        if (!kept[i])
            elim.push_back(i);

    const int nk = static_cast<int>(keep.size());
    const int ne = static_cast<int>(elim.size());
    if (ne == 0) {
        Eigen::MatrixXcd out(nk, nk);
        for (int a = 0; a < nk; ++a)
            for (int b = 0; b < nk; ++b)
                out(a, b) = y(keep[a], keep[b]);
        return out;
    }

    Eigen::MatrixXcd ykk(nk, nk), yke(nk, ne), yek(ne, nk), yee(ne, ne);
    for (int a = 0; a < nk; ++a)
        for (int b = 0; b < nk; ++b)
            ykk(a, b) = y(keep[a], keep[b]);
    for (int a = 0; a < nk; ++a)
        for (int b = 0; b < ne; ++b)
            yke(a, b) = y(keep[a], elim[b]);
    for (int a = 0; a < ne; ++a)
        for (int b = 0; b < nk; ++b)
            yek(a, b) = y(elim[a], keep[b]);
    for (int a = 0; a < ne; ++a)
        for (int b = 0; b < ne; ++b)
            yee(a, b) = y(elim[a], elim[b]);

    Eigen::FullPivLU<Eigen::MatrixXcd> lu(yee);
    if (!lu.isInvertible()) {
        Eigen::MatrixXcd ker = lu.kernel();
        std::string nodes;
        for (int a = 0; a < ne; ++a) {
            if (ker.row(a).norm() > 1e-9) {
                if (!nodes.empty())
                    nodes += ", ";
                nodes += std::to_string(elim[a]);
            }
        }
        throw NumericError(
            "network reduction failed: eliminated nodes form an island with no "
            "path to a retained node (node indices: " + nodes + ")");
    }
    return ykk - yke * lu.solve(yek);
}

/// One stage of the reduced machine-space network, split into conductance
/// and susceptance parts.
struct ReducedStageNetwork {
    Stage stage = Stage::Prefault;
    Eigen::MatrixXd g;
    Eigen::MatrixXd b;

    static ReducedStageNetwork from_complex(Stage stage, const Eigen::MatrixXcd& y) {
        return {stage, y.real(), y.imag()};
    }
};

/// Electrical air-gap power of every machine for internal angles `delta`:
/// with V = E e^{j delta} and I = Y V, Pe_i = Re(V_i conj(I_i)).
inline void electrical_power(const ReducedStageNetwork& net,
                             const Eigen::VectorXd& emf,
                             const Eigen::VectorXd& delta, Eigen::VectorXd& pe) {
    const Eigen::ArrayXd vr = emf.array() * delta.array().cos();
    const Eigen::ArrayXd vi = emf.array() * delta.array().sin();
    const Eigen::ArrayXd ir =
        (net.g * vr.matrix() - net.b * vi.matrix()).array();
    const Eigen::ArrayXd ii =
        (net.g * vi.matrix() + net.b * vr.matrix()).array();
    pe = (vr * ir + vi * ii).matrix();
}

/// Classical model constant-EMF initialization at the solved operating
/// point: E e^{j delta0} = V_t + j xd' I_g with I_g = (Y' V)_k, where Y'
/// carries the load shunts so bus current balances leave only the
/// generator injections.
inline void init_internal_emfs(const NetworkCase& net, Eigen::VectorXd& emf,
                               Eigen::VectorXd& delta0) {
    using cd = std::complex<double>;
    const int n = static_cast<int>(net.buses.size());
    const int m = static_cast<int>(net.generators.size());
    Eigen::VectorXcd v(n);
    for (int k = 0; k < n; ++k)
        v(k) = std::polar(net.buses[k].vm, net.buses[k].va);
    const Eigen::MatrixXcd y = build_admittance(net);
    const Eigen::VectorXcd inj = y * v;
    emf.resize(m);
    delta0.resize(m);
    for (int i = 0; i < m; ++i) {
        const auto& g = net.generators[i];
        const int k = net.bus_index(g.bus);
        const cd e = v(k) + cd(0.0, g.xd_prime) * inj(k);
        emf(i) = std::abs(e);
        delta0(i) = std::arg(e);
        if (!(emf(i) > 0.0))
            throw NumericError("internal EMF of machine " + std::to_string(g.bus) +
                               " is zero at the operating point");
    }
}

/// Everything the swing integrator needs: machine constants, initial state,
/// and the three reduced stage networks.
struct StagedSystem {
    std::vector<int> machine_ids; ///< terminal bus ids, trajectory column order
    Eigen::VectorXd inertia;      ///< M_i = 2 H_i / omega_s
    Eigen::VectorXd damping;
    Eigen::VectorXd mech_power;
    Eigen::VectorXd emf;
    Eigen::VectorXd delta0;
    ReducedStageNetwork prefault;
    ReducedStageNetwork fault_on;
    ReducedStageNetwork post_fault;
    double omega_sync = 2.0 * M_PI * 60.0;

    int size() const { return static_cast<int>(machine_ids.size()); }

    int machine_index(int id) const {
        for (int i = 0; i < size(); ++i)
            if (machine_ids[i] == id)
                return i;
        throw InputError("unknown machine id " + std::to_string(id));
    }

    const ReducedStageNetwork& stage_network(Stage s) const {
        switch (s) {
        case Stage::Prefault: return prefault;
        case Stage::FaultOn: return fault_on;
        default: return post_fault;
        }
    }
};

namespace detail {

/// Augments the bus matrix with one internal node per machine (series
/// admittance 1/(j xd')) and reduces to the internal nodes.
inline Eigen::MatrixXcd reduce_to_internal(const NetworkCase& net,
                                           const Eigen::MatrixXcd& ybus) {
    using cd = std::complex<double>;
    const int n = static_cast<int>(net.buses.size());
    const int m = static_cast<int>(net.generators.size());
    Eigen::MatrixXcd aug = Eigen::MatrixXcd::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = ybus;
    for (int i = 0; i < m; ++i) {
        const auto& g = net.generators[i];
        const int k = net.bus_index(g.bus);
        const cd yg = 1.0 / cd(0.0, g.xd_prime);
        const int gi = n + i;
        aug(gi, gi) += yg;
        aug(k, k) += yg;
        aug(gi, k) -= yg;
        aug(k, gi) -= yg;
    }
    std::vector<int> keep(m);
    for (int i = 0; i < m; ++i)
        keep[i] = n + i;
    return kron_reduce(aug, keep);
}

} // namespace detail

/// Builds the three-stage reduced system for one fault scenario.
inline StagedSystem build_staged_system(const NetworkCase& net,
                                        const FaultScenario& sc) {
    if (!net.has_bus(sc.faulted_bus))
        throw InputError("faulted bus " + std::to_string(sc.faulted_bus) +
                         " is not in the case");
    if (sc.t_clear < 0.0)
        throw InputError("clearing time must be nonnegative");
    if (sc.t_end <= 0.0)
        throw InputError("simulation horizon must be positive");

    StagedSystem sys;
    sys.omega_sync = net.omega_sync();
    const int m = static_cast<int>(net.generators.size());
    sys.inertia.resize(m);
    sys.damping.resize(m);
    sys.mech_power.resize(m);
    for (int i = 0; i < m; ++i) {
        const auto& g = net.generators[i];
        sys.machine_ids.push_back(g.bus);
        sys.inertia(i) = net.inertia_coefficient(g);
        sys.damping(i) = g.d;
        sys.mech_power(i) = g.pm;
    }
    init_internal_emfs(net, sys.emf, sys.delta0);

    AdmittanceOptions pre;
    AdmittanceOptions dur;
    dur.faulted_bus = sc.faulted_bus;
    AdmittanceOptions post;
    post.tripped_branch = sc.tripped_branch;

    sys.prefault = ReducedStageNetwork::from_complex(
        Stage::Prefault, detail::reduce_to_internal(net, build_admittance(net, pre)));
    sys.fault_on = ReducedStageNetwork::from_complex(
        Stage::FaultOn, detail::reduce_to_internal(net, build_admittance(net, dur)));
    sys.post_fault = ReducedStageNetwork::from_complex(
        Stage::PostFault,
        detail::reduce_to_internal(net, build_admittance(net, post)));
    return sys;
}

/// Largest |Pm_i - Pe_i(delta0)| on the prefault network. Near zero when the
/// case carries a consistent solved operating point.
inline double equilibrium_residual(const StagedSystem& sys) {
    Eigen::VectorXd pe;
    electrical_power(sys.prefault, sys.emf, sys.delta0, pe);
    return (sys.mech_power - pe).cwiseAbs().maxCoeff();
}

} // namespace tstab
