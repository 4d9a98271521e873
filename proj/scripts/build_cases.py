#!/usr/bin/env python3
"""Builds the bundled study cases as solved-operating-point JSON files.

Runs a polar Newton power flow over the raw network data, then writes each
case with bus voltages at the solution and generator mechanical powers set
to the exact net injection at the generator terminal (loads folded into the
admittance matrix as constant shunts). That makes the no-fault classical
simulation a fixed point to machine precision.
"""

import json
import sys
from pathlib import Path

import numpy as np


def build_ybus(n, branches):
    y = np.zeros((n, n), dtype=complex)
    for f, t, r, x, b in branches:
        i, j = f - 1, t - 1
        ys = 1.0 / complex(r, x)
        ysh = complex(0.0, b / 2.0)
        y[i, i] += ys + ysh
        y[j, j] += ys + ysh
        y[i, j] -= ys
        y[j, i] -= ys
    return y


def newton_pf(n, ybus, bus_type, p_sched, q_sched, v_sched, tol=1e-12, max_iter=60):
    """bus_type: 0 slack, 1 PV, 2 PQ. Returns complex bus voltages."""
    vm = np.array([v_sched[k] if bus_type[k] != 2 else 1.0 for k in range(n)])
    va = np.zeros(n)
    pv = [k for k in range(n) if bus_type[k] == 1]
    pq = [k for k in range(n) if bus_type[k] == 2]
    ang_idx = pv + pq

    def mismatch(vm, va):
        v = vm * np.exp(1j * va)
        s = v * np.conj(ybus @ v)
        dp = p_sched - s.real
        dq = q_sched - s.imag
        return np.concatenate([dp[ang_idx], dq[pq]])

    def jacobian(vm, va):
        v = vm * np.exp(1j * va)
        ibus = ybus @ v
        diag_v = np.diag(v)
        diag_i = np.diag(ibus)
        diag_vn = np.diag(v / np.abs(v))
        ds_dva = 1j * diag_v @ np.conj(diag_i - ybus @ diag_v)
        ds_dvm = diag_v @ np.conj(ybus @ diag_vn) + np.conj(diag_i) @ diag_vn
        j11 = ds_dva[np.ix_(ang_idx, ang_idx)].real
        j12 = ds_dvm[np.ix_(ang_idx, pq)].real
        j21 = ds_dva[np.ix_(pq, ang_idx)].imag
        j22 = ds_dvm[np.ix_(pq, pq)].imag
        return np.block([[j11, j12], [j21, j22]])

    for _ in range(max_iter):
        f0 = mismatch(vm, va)
        if np.max(np.abs(f0)) < tol:
            return vm * np.exp(1j * va)
        step = np.linalg.solve(jacobian(vm, va), f0)
        for c, k in enumerate(ang_idx):
            va[k] += step[c]
        for c, k in enumerate(pq):
            vm[k] += step[len(ang_idx) + c]
    raise RuntimeError("power flow did not converge")


def emit_case(path, name, n, branches, gens, loads, slack_bus):
    """gens: {bus: (pg_pu or None for slack, vset, H, xdp)}; loads: {bus: (p, q)}."""
    ybus = build_ybus(n, branches)
    bus_type = np.full(n, 2)
    p_sched = np.zeros(n)
    q_sched = np.zeros(n)
    v_sched = np.ones(n)
    for bus, (pg, vset, _, _) in gens.items():
        k = bus - 1
        bus_type[k] = 0 if bus == slack_bus else 1
        v_sched[k] = vset
        if pg is not None:
            p_sched[k] += pg
    for bus, (p, q) in loads.items():
        k = bus - 1
        p_sched[k] -= p
        q_sched[k] -= q

    v = newton_pf(n, ybus, bus_type, p_sched, q_sched, v_sched)

    yload = ybus.copy()
    for bus, (p, q) in loads.items():
        k = bus - 1
        yload[k, k] += complex(p, -q) / abs(v[k]) ** 2
    inj = v * np.conj(yload @ v)
    for k in range(n):
        if (k + 1) not in gens:
            assert abs(inj[k]) < 1e-9, f"{name}: residual injection at bus {k + 1}"

    doc = {
        "base_mva": 100.0,
        "frequency_hz": 60.0,
        "buses": [
            {"id": k + 1, "vm": float(abs(v[k])), "va": float(np.angle(v[k]))}
            for k in range(n)
        ],
        "branches": [
            {"from": f, "to": t, "r": r, "x": x, "b": b}
            for f, t, r, x, b in branches
        ],
        "generators": [
            {
                "bus": bus,
                "H": gens[bus][2],
                "xd_prime": gens[bus][3],
                "Pm": float(inj[bus - 1].real),
                "D": 0.0,
            }
            for bus in sorted(gens)
        ],
        "loads": [
            {"bus": bus, "P": p, "Q": q} for bus, (p, q) in sorted(loads.items())
        ],
    }
    text = json.dumps(doc, indent=1)
    Path(path).write_text(text + "\n")
    total_pm = sum(g["Pm"] for g in doc["generators"])
    print(f"{name}: wrote {path}  (sum Pm = {total_pm:.4f} p.u.)")


def three_machine(out_dir):
    branches = [
        (1, 4, 0.0, 0.0576, 0.0),
        (2, 7, 0.0, 0.0625, 0.0),
        (3, 9, 0.0, 0.0586, 0.0),
        (4, 5, 0.010, 0.085, 0.176),
        (4, 6, 0.017, 0.092, 0.158),
        (5, 7, 0.032, 0.161, 0.306),
        (6, 9, 0.039, 0.170, 0.358),
        (7, 8, 0.0085, 0.072, 0.149),
        (8, 9, 0.0119, 0.1008, 0.209),
    ]
    gens = {
        1: (None, 1.040, 23.64, 0.0608),
        2: (1.63, 1.025, 6.40, 0.1198),
        3: (0.85, 1.025, 3.01, 0.1813),
    }
    loads = {5: (1.25, 0.50), 6: (0.90, 0.30), 8: (1.00, 0.35)}
    emit_case(out_dir / "three_machine.json", "three_machine", 9, branches, gens,
              loads, slack_bus=1)


def new_england39(out_dir):
    branches = [
        (1, 2, 0.0035, 0.0411, 0.6987),
        (1, 39, 0.0010, 0.0250, 0.7500),
        (2, 3, 0.0013, 0.0151, 0.2572),
        (2, 25, 0.0070, 0.0086, 0.1460),
        (2, 30, 0.0, 0.0181, 0.0),
        (3, 4, 0.0013, 0.0213, 0.2214),
        (3, 18, 0.0011, 0.0133, 0.2138),
        (4, 5, 0.0008, 0.0128, 0.1342),
        (4, 14, 0.0008, 0.0129, 0.1382),
        (5, 6, 0.0002, 0.0026, 0.0434),
        (5, 8, 0.0008, 0.0112, 0.1476),
        (6, 7, 0.0006, 0.0092, 0.1130),
        (6, 11, 0.0007, 0.0082, 0.1389),
        (6, 31, 0.0, 0.0250, 0.0),
        (7, 8, 0.0004, 0.0046, 0.0780),
        (8, 9, 0.0023, 0.0363, 0.3804),
        (9, 39, 0.0010, 0.0250, 1.2000),
        (10, 11, 0.0004, 0.0043, 0.0729),
        (10, 13, 0.0004, 0.0043, 0.0729),
        (10, 32, 0.0, 0.0200, 0.0),
        (12, 11, 0.0016, 0.0435, 0.0),
        (12, 13, 0.0016, 0.0435, 0.0),
        (13, 14, 0.0009, 0.0101, 0.1723),
        (14, 15, 0.0018, 0.0217, 0.3660),
        (15, 16, 0.0009, 0.0094, 0.1710),
        (16, 17, 0.0007, 0.0089, 0.1342),
        (16, 19, 0.0016, 0.0195, 0.3040),
        (16, 21, 0.0008, 0.0135, 0.2548),
        (16, 24, 0.0003, 0.0059, 0.0680),
        (17, 18, 0.0007, 0.0082, 0.1319),
        (17, 27, 0.0013, 0.0173, 0.3216),
        (19, 20, 0.0007, 0.0138, 0.0),
        (19, 33, 0.0007, 0.0142, 0.0),
        (20, 34, 0.0009, 0.0180, 0.0),
        (21, 22, 0.0008, 0.0140, 0.2565),
        (22, 23, 0.0006, 0.0096, 0.1846),
        (22, 35, 0.0, 0.0143, 0.0),
        (23, 24, 0.0022, 0.0350, 0.3610),
        (23, 36, 0.0005, 0.0272, 0.0),
        (25, 26, 0.0032, 0.0323, 0.5310),
        (25, 37, 0.0006, 0.0232, 0.0),
        (26, 27, 0.0014, 0.0147, 0.2396),
        (26, 28, 0.0043, 0.0474, 0.7802),
        (26, 29, 0.0057, 0.0625, 1.0290),
        (28, 29, 0.0014, 0.0151, 0.2490),
        (29, 38, 0.0008, 0.0156, 0.0),
    ]
    gens = {
        30: (2.50, 1.0475, 42.0, 0.031),
        31: (None, 0.982, 30.3, 0.0697),
        32: (6.50, 0.9831, 35.8, 0.0531),
        33: (6.32, 0.9972, 28.6, 0.0436),
        34: (5.08, 1.0123, 26.0, 0.132),
        35: (6.50, 1.0493, 34.8, 0.050),
        36: (5.60, 1.0635, 26.4, 0.049),
        37: (5.40, 1.0278, 24.3, 0.057),
        38: (8.30, 1.0265, 34.5, 0.057),
        39: (10.00, 1.030, 500.0, 0.006),
    }
    loads = {
        3: (3.22, 0.024),
        4: (5.00, 1.84),
        7: (2.338, 0.84),
        8: (5.22, 1.76),
        12: (0.085, 0.88),
        15: (3.20, 1.53),
        16: (3.29, 0.323),
        18: (1.58, 0.30),
        20: (6.80, 1.03),
        21: (2.74, 1.15),
        23: (2.475, 0.846),
        24: (3.086, -0.922),
        25: (2.24, 0.472),
        26: (1.39, 0.17),
        27: (2.81, 0.755),
        28: (2.06, 0.276),
        29: (2.835, 0.269),
        31: (0.092, 0.046),
        39: (11.04, 2.50),
    }
    emit_case(out_dir / "new_england39.json", "new_england39", 39, branches, gens,
              loads, slack_bus=31)


def main():
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("cases")
    out_dir.mkdir(parents=True, exist_ok=True)
    three_machine(out_dir)
    new_england39(out_dir)


if __name__ == "__main__":
    main()
