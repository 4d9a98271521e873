#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tstab/coi.hpp"
#include "tstab/errors.hpp"

namespace tstab {

enum class EventKind { Dsp, Dlp, NoneByHorizon };

inline const char* event_kind_name(EventKind k) {
    switch (k) {
    case EventKind::Dsp: return "DSP";
    case EventKind::Dlp: return "DLP";
    default: return "none_by_horizon";
    }
}

/// First post-clearing turning point of one machine: a DSP (speed peak,
/// ω̃ crosses + to −) or a DLP (deceleration lost, f crosses − to + while
/// still speeding, ω̃ > 0). Crossing time and angle are linearly
/// interpolated between the bracketing samples.
struct SwingEvent {
    EventKind kind = EventKind::NoneByHorizon;
    double t_event = 0.0;
    double theta_event = 0.0;
    double f_event = 0.0;
    double omega_rel_event = 0.0;
    /// Sample index opening the bracketing interval (kind != none).
    int bracket = -1;
};

enum class MachineStatus { Stable, Unstable, Undetermined };

inline const char* machine_status_name(MachineStatus s) {
    switch (s) {
    case MachineStatus::Stable: return "stable";
    case MachineStatus::Unstable: return "unstable";
    default: return "undetermined";
    }
}

/// Margin reported when the quadratic extension has no predicted DLP: the
/// machine is far from instability and Eq-style ratio margins are undefined.
inline constexpr double kCappedMargin = 10.0;

struct QuadraticFit {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    /// Same parabola written about u = θ − θ_DSP: a·u² + slope_dsp·u + f_dsp.
    /// The centered form keeps evaluation, the root, and the integral well
    /// conditioned when the fit window is narrow and the coefficients large.
    double slope_dsp = 0.0;
    double f_dsp = 0.0;
    double theta_dsp = 0.0;
    std::optional<double> theta_dlp_pred;
    /// Fit points as (theta, f): clearing point, DSP, max-deceleration point.
    std::array<std::pair<double, double>, 3> points{};

    double eval(double theta) const {
        const double u = theta - theta_dsp;
        return (a * u + slope_dsp) * u + f_dsp;
    }
};

struct MachineVerdict {
    int machine_id = 0;
    MachineStatus status = MachineStatus::Undetermined;
    SwingEvent event;
    double acc_area = 0.0;
    std::optional<double> dec_area;
    std::optional<double> ext_area;
    std::optional<double> eta;
    bool capped = false;
};

namespace detail {

inline double lerp(double a, double b, double s) { return a + (b - a) * s; }

struct Crossing {
    double s = 0.0; ///< fraction into the bracketing interval
    bool found = false;
};

} // namespace detail

/// Scans post-clearing samples in time order and returns the machine's
/// first DSP or DLP. When both crossings fall in one interval the earlier
/// one wins; an exact tie is a DSP.
inline SwingEvent detect_event(const KimbarkSeries& series) {
    const int last = series.samples() - 1;
    if (last - series.clear_index < 1)
        throw InputError("machine " + std::to_string(series.machine_id) +
                         ": fewer than two post-clearing samples");
    for (int k = series.clear_index; k < last; ++k) {
        detail::Crossing dsp, dlp;
        const double w0 = series.omega_rel[k], w1 = series.omega_rel[k + 1];
        const double f0 = series.f[k], f1 = series.f[k + 1];
        if (w0 > 0.0 && w1 <= 0.0) {
            dsp.s = w0 / (w0 - w1);
            dsp.found = true;
        }
        if (f0 < 0.0 && f1 >= 0.0) {
            const double s = -f0 / (f1 - f0);
            if (detail::lerp(w0, w1, s) > 0.0) {
                dlp.s = s;
                dlp.found = true;
            }
        }
        if (!dsp.found && !dlp.found)
            continue;
        SwingEvent ev;
        if (dsp.found && (!dlp.found || dsp.s <= dlp.s)) {
            ev.kind = EventKind::Dsp;
            ev.bracket = k;
            const double s = dsp.s;
            ev.t_event = detail::lerp(series.t[k], series.t[k + 1], s);
            ev.theta_event = detail::lerp(series.theta[k], series.theta[k + 1], s);
            ev.f_event = detail::lerp(f0, f1, s);
            ev.omega_rel_event = detail::lerp(w0, w1, s);
        } else {
            ev.kind = EventKind::Dlp;
            ev.bracket = k;
            const double s = dlp.s;
            ev.t_event = detail::lerp(series.t[k], series.t[k + 1], s);
            ev.theta_event = detail::lerp(series.theta[k], series.theta[k + 1], s);
            ev.f_event = detail::lerp(f0, f1, s);
            ev.omega_rel_event = detail::lerp(w0, w1, s);
        }
        return ev;
    }
    SwingEvent none;
    none.kind = EventKind::NoneByHorizon;
    none.t_event = series.t[last];
    none.theta_event = series.theta[last];
    none.f_event = series.f[last];
    none.omega_rel_event = series.omega_rel[last];
    return none;
}

/// Trapezoidal ∫ f dθ over the fault-on samples (t = 0 to t_clear). By
/// work-energy with ω̃(0) = 0 this is the kinetic energy gained, so it
/// equals ½ M ω̃(t_clear)² when damping is off.
inline double acceleration_area(const KimbarkSeries& series) {
    double area = 0.0;
    for (int k = 0; k + 1 < series.clear_index; ++k) {
        area += 0.5 * (series.f[k] + series.f[k + 1]) *
                (series.theta[k + 1] - series.theta[k]);
    }
    return area;
}

/// Trapezoidal ∫ (−f) dθ from clearing to the event, net signed, with the
/// interpolated event point as the final integration node.
inline double deceleration_area(const KimbarkSeries& series, const SwingEvent& event) {
    if (event.kind == EventKind::NoneByHorizon)
        throw InputError("deceleration area needs a DSP or DLP event");
    double area = 0.0;
    for (int k = series.clear_index; k < event.bracket; ++k) {
        area -= 0.5 * (series.f[k] + series.f[k + 1]) *
                (series.theta[k + 1] - series.theta[k]);
    }
    const int k = event.bracket;
    area -= 0.5 * (series.f[k] + event.f_event) *
            (event.theta_event - series.theta[k]);
    return area;
}

/// Fits f_APP = aθ² + bθ + c through the clearing point P2 (first
/// post-fault sample), the interpolated DSP P3, and the stored sample of
/// maximum deceleration P4 strictly between them. θ_DLP_pred is the larger
/// root of f_APP beyond θ_DSP, absent when no real root lies there.
inline QuadraticFit fit_quadratic(const KimbarkSeries& series,
                                  const SwingEvent& event) {
    if (event.kind != EventKind::Dsp)
        throw InputError("quadratic extension is defined at a DSP only");
    const int c0 = series.clear_index;
    const std::pair<double, double> p2{series.theta[c0], series.f[c0]};
    const std::pair<double, double> p3{event.theta_event, event.f_event};
    int best = -1;
    for (int k = c0 + 1; k <= event.bracket; ++k) {
        if (series.t[k] >= event.t_event)
            break;
        if (best < 0 || series.f[k] < series.f[best])
            best = k;
    }
    if (best < 0)
        throw NumericError("machine " + std::to_string(series.machine_id) +
                           ": no stored sample between clearing and DSP");
    const std::pair<double, double> p4{series.theta[best], series.f[best]};

    const std::array<std::pair<double, double>, 3> pts{p2, p3, p4};
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (std::abs(pts[i].first - pts[j].first) < 1e-12)
                throw NumericError("machine " + std::to_string(series.machine_id) +
                                   ": degenerate fit geometry, two points share "
                                   "theta");

    const double th0 = event.theta_event;
    Eigen::Matrix3d vand;
    Eigen::Vector3d rhs;
    for (int i = 0; i < 3; ++i) {
        const double u = pts[i].first - th0;
        vand(i, 0) = u * u;
        vand(i, 1) = u;
        vand(i, 2) = 1.0;
        rhs(i) = pts[i].second;
    }
    Eigen::FullPivLU<Eigen::Matrix3d> lu(vand);
    if (!lu.isInvertible())
        throw NumericError("machine " + std::to_string(series.machine_id) +
                           ": singular quadratic interpolation system");
    const Eigen::Vector3d coef = lu.solve(rhs);

    QuadraticFit fit;
    fit.a = coef(0);
    fit.slope_dsp = coef(1);
    fit.f_dsp = coef(2);
    fit.b = coef(1) - 2.0 * coef(0) * th0;
    fit.c = (coef(0) * th0 - coef(1)) * th0 + coef(2);
    fit.theta_dsp = th0;
    fit.points = pts;

    const double a = fit.a, b = fit.slope_dsp, c = fit.f_dsp;
    if (std::abs(a) < 1e-300) {
        if (b != 0.0) {
            const double root = -c / b;
            if (root > 0.0)
                fit.theta_dlp_pred = th0 + root;
        }
    } else {
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            const double r1 = (-b - sq) / (2.0 * a);
            const double r2 = (-b + sq) / (2.0 * a);
            const double larger = std::max(r1, r2);
            if (larger > 0.0)
                fit.theta_dlp_pred = th0 + larger;
        }
    }
    return fit;
}

/// Closed-form ∫ (−f_APP) dθ from θ_DSP to θ_DLP_pred.
inline double extended_area(const QuadraticFit& fit) {
    if (!fit.theta_dlp_pred)
        throw InputError("extended area needs a predicted DLP angle");
    const double u = *fit.theta_dlp_pred - fit.theta_dsp;
    double area = -(((fit.a / 3.0) * u + fit.slope_dsp / 2.0) * u + fit.f_dsp) * u;
    if (area < 0.0 && area > -1e-12)
        area = 0.0;
    if (area < 0.0)
        throw NumericError("extended deceleration area is negative; the fitted "
                           "curve re-accelerates before the predicted DLP");
    return area;
}

/// Stability margin. Unstable machines (DLP) rate the shortfall of actual
/// deceleration; stable machines (DSP) rate the spare deceleration of the
/// extended curve. A critically stable machine gets exactly 0.
inline double margin(double acc_area, double dec_area, std::optional<double> ext_area,
                     MachineStatus status) {
    if (!(acc_area > 0.0))
        throw InputError("margin undefined: machine never accelerated");
    if (status == MachineStatus::Unstable)
        return (dec_area - acc_area) / acc_area;
    if (status == MachineStatus::Stable) {
        if (!ext_area)
            throw InputError("stable margin needs the extended area");
        return *ext_area / acc_area;
    }
    throw InputError("margin undefined for an undetermined machine");
}

/// Full per-machine first-swing analysis: event, areas, margin. Machines
/// whose quadratic extension degenerates (no predicted DLP, fit geometry
/// collapse, or negative extension) get the capped margin.
inline MachineVerdict analyze_machine(const KimbarkSeries& series) {
    MachineVerdict v;
    v.machine_id = series.machine_id;
    v.event = detect_event(series);
    v.acc_area = acceleration_area(series);
    if (v.event.kind == EventKind::NoneByHorizon) {
        v.status = MachineStatus::Undetermined;
        return v;
    }
    v.dec_area = deceleration_area(series, v.event);
    if (v.event.kind == EventKind::Dlp) {
        v.status = MachineStatus::Unstable;
        if (v.acc_area > 0.0)
            v.eta = margin(v.acc_area, *v.dec_area, std::nullopt, v.status);
        return v;
    }
    v.status = MachineStatus::Stable;
    if (!(v.acc_area > 0.0))
        return v;
    try {
        const QuadraticFit fit = fit_quadratic(series, v.event);
        if (!fit.theta_dlp_pred) {
            v.eta = kCappedMargin;
            v.capped = true;
            return v;
        }
        v.ext_area = extended_area(fit);
        v.eta = margin(v.acc_area, *v.dec_area, v.ext_area, v.status);
    } catch (const NumericError&) {
        v.eta = kCappedMargin;
        v.capped = true;
        v.ext_area.reset();
    }
    return v;
}

} // namespace tstab
