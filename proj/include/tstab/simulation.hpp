#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "tstab/errors.hpp"
#include "tstab/reduction.hpp"

namespace tstab {

struct SimulationOptions {
    double dt = 1e-3; ///< integration step, s
};

/// Synchronous-frame rotor trajectory across fault-on and post-fault stages.
/// Column k of `delta`/`omega` is the state at `times[k]`. The clearing
/// instant appears twice: the last fault-on sample and the first post-fault
/// sample share t and state, so every sample has an unambiguous stage.
struct Trajectory {
    std::vector<int> machine_ids;
    std::vector<double> times;
    Eigen::MatrixXd delta; ///< rad, unwrapped
    Eigen::MatrixXd omega; ///< rad/s deviation from synchronous
    int clear_index = 0;   ///< first post-fault column
    double t_clear = 0.0;
    double dt = 1e-3;
    Eigen::VectorXd inertia;
    double omega_sync = 2.0 * M_PI * 60.0;
    /// True when the state went non-finite; the trajectory is truncated at
    /// the last finite sample and `blowup_time` records where.
    bool blew_up = false;
    double blowup_time = 0.0;
    /// Set when the requested t_clear was not on the step grid and had to
    /// be rounded by more than 1e-12 s.
    bool clear_snapped = false;
    double t_clear_requested = 0.0;

    int size() const { return static_cast<int>(machine_ids.size()); }
    int samples() const { return static_cast<int>(times.size()); }

    Stage stage_at(int column) const {
        return column < clear_index ? Stage::FaultOn : Stage::PostFault;
    }
};

namespace detail {

inline void swing_rhs(const StagedSystem& sys, const ReducedStageNetwork& net,
                      const Eigen::VectorXd& delta, const Eigen::VectorXd& omega,
                      Eigen::VectorXd& pe, Eigen::VectorXd& ddelta,
                      Eigen::VectorXd& domega) {
    electrical_power(net, sys.emf, delta, pe);
    ddelta = omega;
    domega = (sys.mech_power - pe - sys.damping.cwiseProduct(omega).matrix())
                 .cwiseQuotient(sys.inertia);
}

/// Classical RK4 step in place.
inline void rk4_step(const StagedSystem& sys, const ReducedStageNetwork& net,
                     double dt, Eigen::VectorXd& delta, Eigen::VectorXd& omega) {
    static thread_local Eigen::VectorXd pe, kd1, kw1, kd2, kw2, kd3, kw3, kd4, kw4, d,
        w;
    swing_rhs(sys, net, delta, omega, pe, kd1, kw1);
    d = delta + 0.5 * dt * kd1;
    w = omega + 0.5 * dt * kw1;
    swing_rhs(sys, net, d, w, pe, kd2, kw2);
    d = delta + 0.5 * dt * kd2;
    w = omega + 0.5 * dt * kw2;
    swing_rhs(sys, net, d, w, pe, kd3, kw3);
    d = delta + dt * kd3;
    w = omega + dt * kw3;
    swing_rhs(sys, net, d, w, pe, kd4, kw4);
    delta += (dt / 6.0) * (kd1 + 2.0 * kd2 + 2.0 * kd3 + kd4);
    omega += (dt / 6.0) * (kw1 + 2.0 * kw2 + 2.0 * kw3 + kw4);
}

inline bool finite_state(const Eigen::VectorXd& delta, const Eigen::VectorXd& omega) {
    return delta.allFinite() && omega.allFinite();
}

} // namespace detail

/// Integrates the staged swing equations with fixed-step RK4 from the
/// prefault equilibrium. The clearing instant is snapped onto the step grid
/// and the network switch happens exactly there, never mid-step.
inline Trajectory simulate(const StagedSystem& sys, const FaultScenario& sc,
                           const SimulationOptions& opt = {}) {
    if (!(opt.dt > 0.0))
        throw InputError("integration step must be positive");
    if (sc.t_clear > sc.t_end)
        throw InputError("clearing time exceeds the simulation horizon");

    const double dt = opt.dt;
    const long n_clear = std::lround(sc.t_clear / dt);
    const long n_total = std::lround(sc.t_end / dt);
    const double t_clear = static_cast<double>(n_clear) * dt;

    Trajectory tr;
    tr.machine_ids = sys.machine_ids;
    tr.dt = dt;
    tr.t_clear = t_clear;
    tr.t_clear_requested = sc.t_clear;
    tr.clear_snapped = std::abs(t_clear - sc.t_clear) > 1e-12;
    tr.inertia = sys.inertia;
    tr.omega_sync = sys.omega_sync;

    const int n = sys.size();
    const long n_post = n_total - n_clear;
    const long total_cols = (n_clear + 1) + (n_post + 1);
    tr.delta.resize(n, total_cols);
    tr.omega.resize(n, total_cols);
    tr.times.reserve(total_cols);

    Eigen::VectorXd delta = sys.delta0;
    Eigen::VectorXd omega = Eigen::VectorXd::Zero(n);

    long col = 0;
    auto record = [&](double t) {
        tr.times.push_back(t);
        tr.delta.col(col) = delta;
        tr.omega.col(col) = omega;
        ++col;
    };
    auto truncate = [&](double t) {
        tr.blew_up = true;
        tr.blowup_time = t;
        tr.delta.conservativeResize(n, col);
        tr.omega.conservativeResize(n, col);
    };

    record(0.0);
    for (long k = 0; k < n_clear; ++k) {
        detail::rk4_step(sys, sys.fault_on, dt, delta, omega);
        const double t = static_cast<double>(k + 1) * dt;
        if (!detail::finite_state(delta, omega)) {
            tr.clear_index = static_cast<int>(col);
            truncate(t);
            return tr;
        }
        record(t);
    }
    tr.clear_index = static_cast<int>(col);
    record(t_clear);
    for (long k = 0; k < n_post; ++k) {
        detail::rk4_step(sys, sys.post_fault, dt, delta, omega);
        const double t = static_cast<double>(n_clear + k + 1) * dt;
        if (!detail::finite_state(delta, omega)) {
            truncate(t);
            return tr;
        }
        record(t);
    }
    return tr;
}

} // namespace tstab
