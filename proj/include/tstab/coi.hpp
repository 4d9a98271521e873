#pragma once

#include <vector>

#include <Eigen/Dense>

#include "tstab/reduction.hpp"
#include "tstab/simulation.hpp"

namespace tstab {

/// Center-of-inertia view of a trajectory: the inertia-weighted mean motion
/// and each machine's angle/speed relative to it.
struct CoiFrame {
    std::vector<double> delta_coi; ///< rad, per sample
    std::vector<double> omega_coi; ///< rad/s, per sample
    Eigen::MatrixXd theta;         ///< rad, machine x sample
    Eigen::MatrixXd omega_rel;     ///< rad/s, machine x sample
    double total_inertia = 0.0;
};

inline CoiFrame to_coi(const Trajectory& tr) {
    CoiFrame coi;
    const int n = tr.size();
    const int t = tr.samples();
    coi.total_inertia = tr.inertia.sum();
    coi.delta_coi.resize(t);
    coi.omega_coi.resize(t);
    coi.theta.resize(n, t);
    coi.omega_rel.resize(n, t);
    for (int k = 0; k < t; ++k) {
        const double dc = tr.inertia.dot(tr.delta.col(k)) / coi.total_inertia;
        const double wc = tr.inertia.dot(tr.omega.col(k)) / coi.total_inertia;
        coi.delta_coi[k] = dc;
        coi.omega_coi[k] = wc;
        coi.theta.col(k) = tr.delta.col(k).array() - dc;
        coi.omega_rel.col(k) = tr.omega.col(k).array() - wc;
    }
    return coi;
}

/// One machine's swing curve in the COI frame: relative angle, accelerating
/// power f_i = Pm_i - Pe_i - (M_i/M_T) P_COI, and relative speed, sampled on
/// the trajectory grid. With damping off, M_i dω̃_i/dt = f_i.
struct KimbarkSeries {
    int machine_id = 0;
    int machine_index = 0;
    std::vector<double> t;
    std::vector<double> theta;     ///< rad
    std::vector<double> f;         ///< p.u.
    std::vector<double> omega_rel; ///< rad/s
    int clear_index = 0;           ///< first post-fault sample

    int samples() const { return static_cast<int>(t.size()); }

    Stage stage_at(int k) const {
        return k < clear_index ? Stage::FaultOn : Stage::PostFault;
    }
};

/// Builds the Kimbark series of every machine, re-evaluating electrical
/// power on the stage network active at each sample.
inline std::vector<KimbarkSeries> kimbark_all(const StagedSystem& sys,
                                              const Trajectory& tr,
                                              const CoiFrame& coi) {
    const int n = tr.size();
    const int t = tr.samples();
    std::vector<KimbarkSeries> out(n);
    for (int i = 0; i < n; ++i) {
        out[i].machine_id = tr.machine_ids[i];
        out[i].machine_index = i;
        out[i].clear_index = tr.clear_index;
        out[i].t = tr.times;
        out[i].theta.resize(t);
        out[i].f.resize(t);
        out[i].omega_rel.resize(t);
    }
    Eigen::VectorXd pe;
    for (int k = 0; k < t; ++k) {
        const auto& net = sys.stage_network(tr.stage_at(k));
        electrical_power(net, sys.emf, tr.delta.col(k), pe);
        const Eigen::VectorXd acc = sys.mech_power - pe;
        const double p_coi = acc.sum();
        for (int i = 0; i < n; ++i) {
            out[i].theta[k] = coi.theta(i, k);
            out[i].omega_rel[k] = coi.omega_rel(i, k);
            out[i].f[k] = acc(i) - tr.inertia(i) / coi.total_inertia * p_coi;
        }
    }
    return out;
}

inline KimbarkSeries kimbark_series(const StagedSystem& sys, const Trajectory& tr,
                                    const CoiFrame& coi, int machine_id) {
    const int idx = sys.machine_index(machine_id);
    auto all = kimbark_all(sys, tr, coi);
    return all[idx];
}

} // namespace tstab
