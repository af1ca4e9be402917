#!/usr/bin/env python3
"""Fixture generator and independent power-flow oracle.

Builds the bundled grid cases deterministically, solves them with a
straight-line NumPy Newton-Raphson (complex-form Jacobian, a different
derivation route than the C++ implementation) and prints frozen oracle
values for the test suite. Rerun only to regenerate data/*.json.
"""

import json
import os
import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.normpath(os.path.join(HERE, "..", "..", "data"))


# ---------------------------------------------------------------- case5
def make_case5():
    buses = [
        dict(index=0, kind="slack", p_mw=0.0, q_mvar=0.0, shunt_g_pu=0.0, shunt_b_pu=0.0),
        dict(index=1, kind="load", p_mw=-10.0, q_mvar=-5.0, shunt_g_pu=0.0, shunt_b_pu=0.0),
        dict(index=2, kind="load", p_mw=-30.0, q_mvar=-10.0, shunt_g_pu=0.0, shunt_b_pu=0.0),
        dict(index=3, kind="load", p_mw=-40.0, q_mvar=-12.0, shunt_g_pu=0.0, shunt_b_pu=0.0),
        dict(index=4, kind="load", p_mw=20.0, q_mvar=0.0, shunt_g_pu=0.0, shunt_b_pu=0.0),
    ]
    branches = [
        dict(**{"from": 1, "to": 0}, r_pu=0.002, x_pu=0.04, b_shunt_pu=0.0, i_max_pu=5.0),
        dict(**{"from": 1, "to": 2}, r_pu=0.02, x_pu=0.06, b_shunt_pu=0.01, i_max_pu=3.0),
        dict(**{"from": 2, "to": 3}, r_pu=0.02, x_pu=0.06, b_shunt_pu=0.01, i_max_pu=3.0),
        dict(**{"from": 3, "to": 4}, r_pu=0.02, x_pu=0.06, b_shunt_pu=0.01, i_max_pu=3.0),
        dict(**{"from": 4, "to": 1}, r_pu=0.02, x_pu=0.06, b_shunt_pu=0.01, i_max_pu=3.0),
        dict(**{"from": 2, "to": 4}, r_pu=0.015, x_pu=0.05, b_shunt_pu=0.01, i_max_pu=3.0),
    ]
    return dict(
        base_power_mva=100.0,
        buses=buses,
        branches=branches,
        interconnections=[0],
        flexibilities=[
            dict(bus=2, dp_min_mw=-20.0, dp_max_mw=0.0, dq_min_mvar=-30.0, dq_max_mvar=30.0),
            dict(bus=4, dp_min_mw=-15.0, dp_max_mw=0.0, dq_min_mvar=-25.0, dq_max_mvar=25.0),
        ],
        limits=dict(v_min_pu=0.9, v_max_pu=1.1,
                    delta_min_rad=-1.5707963267948966,
                    delta_max_rad=1.5707963267948966),
    )


# --------------------------------------------------------------- case34
# 30 HV nodes (0..29) in a ring with 4 chords, EHV nodes 30..32 coupled to a
# common slack (33). Interconnections: HV14->EHV30, HV11->EHV31, HV28->EHV32.
def make_case34():
    flex_buses = {13, 14, 15, 10, 11, 12, 27, 28, 29, 2, 20}
    buses = []
    for i in range(30):
        load_p = -(6.0 + (7 * i) % 10)           # -6..-15 MW
        load_q = -(2.0 + (5 * i) % 5)            # -2..-6 Mvar
        gen_p = 10.0 if i in flex_buses else 0.0  # DER infeed at flex nodes
        buses.append(dict(index=i, kind="load",
                          p_mw=load_p + gen_p, q_mvar=load_q,
                          shunt_g_pu=0.0, shunt_b_pu=0.0))
    for i in range(30, 33):  # EHV coupling nodes, no demand of their own
        buses.append(dict(index=i, kind="load", p_mw=0.0, q_mvar=0.0,
                          shunt_g_pu=0.0, shunt_b_pu=0.0))
    buses.append(dict(index=33, kind="slack", p_mw=0.0, q_mvar=0.0,
                      shunt_g_pu=0.0, shunt_b_pu=0.0))

    branches = []
    for i in range(30):  # HV ring
        j = (i + 1) % 30
        r = 0.018 + 0.004 * ((3 * i) % 3)
        x = 0.055 + 0.01 * ((2 * i) % 2)
        branches.append(dict(**{"from": i, "to": j}, r_pu=round(r, 6),
                             x_pu=round(x, 6), b_shunt_pu=0.012, i_max_pu=4.0))
    for a, b in [(2, 17), (5, 23), (9, 26), (13, 20)]:  # chords
        branches.append(dict(**{"from": a, "to": b}, r_pu=0.016, x_pu=0.05,
                             b_shunt_pu=0.01, i_max_pu=4.0))
    ic_indices = []
    for hv, ehv in [(14, 30), (11, 31), (28, 32)]:  # interconnections
        ic_indices.append(len(branches))
        branches.append(dict(**{"from": hv, "to": ehv}, r_pu=0.0015,
                             x_pu=0.012, b_shunt_pu=0.0, i_max_pu=9.0))
    for ehv in (30, 31, 32):  # stiff common-slack couplings
        branches.append(dict(**{"from": ehv, "to": 33}, r_pu=0.0004,
                             x_pu=0.004, b_shunt_pu=0.0, i_max_pu=12.0))

    flexibilities = [
        dict(bus=d, dp_min_mw=-40.0, dp_max_mw=0.0,
             dq_min_mvar=-150.0, dq_max_mvar=150.0)
        for d in sorted(flex_buses)
    ]
    return dict(
        base_power_mva=100.0,
        buses=buses,
        branches=branches,
        interconnections=ic_indices,
        flexibilities=flexibilities,
        limits=dict(v_min_pu=0.88, v_max_pu=1.12,
                    delta_min_rad=-1.5707963267948966,
                    delta_max_rad=1.5707963267948966),
    )


def make_overload(case, factor=50.0):
    out = json.loads(json.dumps(case))
    for bus in out["buses"]:
        if bus["kind"] == "load":
            bus["p_mw"] *= factor
            bus["q_mvar"] *= factor
    return out


# ------------------------------------------------- independent NR oracle
def ybus_of(case):
    n = len(case["buses"])
    Y = np.zeros((n, n), dtype=complex)
    for br in case["branches"]:
        i, j = br["from"], br["to"]
        ys = 1.0 / complex(br["r_pu"], br["x_pu"])
        yh = 0.5j * br["b_shunt_pu"]
        Y[i, i] += ys + yh
        Y[j, j] += ys + yh
        Y[i, j] -= ys
        Y[j, i] -= ys
    for bus in case["buses"]:
        Y[bus["index"], bus["index"]] += complex(bus["shunt_g_pu"], bus["shunt_b_pu"])
    return Y


def solve_nr(case, tol=1e-10, max_iter=30):
    n = len(case["buses"])
    base = case["base_power_mva"]
    Y = ybus_of(case)
    slack = next(b["index"] for b in case["buses"] if b["kind"] == "slack")
    keep = [i for i in range(n) if i != slack]
    sched = np.array([complex(b["p_mw"], b["q_mvar"]) / base for b in case["buses"]])
    V = np.ones(n, dtype=complex)
    for it in range(max_iter):
        S = V * np.conj(Y @ V)
        mis = np.concatenate([(sched - S).real[keep], (sched - S).imag[keep]])
        worst = np.abs(mis).max()
        if worst <= tol:
            return V, it, worst, True
        I = Y @ V
        dSdVa = 1j * np.diag(V) @ np.conj(np.diag(I) - Y @ np.diag(V))
        Vn = V / np.abs(V)
        dSdVm = np.diag(V) @ np.conj(Y @ np.diag(Vn)) + np.conj(np.diag(I)) @ np.diag(Vn)
        J = np.block([[dSdVa[np.ix_(keep, keep)].real, dSdVm[np.ix_(keep, keep)].real],
                      [dSdVa[np.ix_(keep, keep)].imag, dSdVm[np.ix_(keep, keep)].imag]])
        dx = np.linalg.solve(J, mis)
        r = len(keep)
        ang = np.angle(V)
        mag = np.abs(V)
        ang[keep] += dx[:r]
        mag[keep] += dx[r:]
        V = mag * np.exp(1j * ang)
    S = V * np.conj(Y @ V)
    mis = np.concatenate([(sched - S).real[keep], (sched - S).imag[keep]])
    return V, max_iter, np.abs(mis).max(), False


def branch_from_flow(case, V, k):
    br = case["branches"][k]
    i, j = br["from"], br["to"]
    ys = 1.0 / complex(br["r_pu"], br["x_pu"])
    yh = 0.5j * br["b_shunt_pu"]
    Iij = ys * (V[i] - V[j]) + yh * V[i]
    S = V[i] * np.conj(Iij)
    return S.real, S.imag, abs(Iij)


def main():
    os.makedirs(DATA, exist_ok=True)
    case5 = make_case5()
    case34 = make_case34()
    overload = make_overload(case5)

    for name, case in [("case5.json", case5), ("case34.json", case34),
                       ("case5_overload.json", overload)]:
        with open(os.path.join(DATA, name), "w") as f:
            json.dump(case, f, indent=1)
        print("wrote", name, "buses:", len(case["buses"]),
              "branches:", len(case["branches"]),
              "ic:", len(case["interconnections"]))

    for mvar in (60.0, 40.0):
        for s in range(3):
            scen = dict(name=f"scenario{s+1}_q{int(mvar)}",
                        priority_interconnection=s,
                        weights=dict(priority_q=-1.0, other_q=0.1, dp=-1.0),
                        q_thresh_pos_mvar=mvar, q_thresh_neg_mvar=-mvar,
                        k_max=6, relinearize=True)
            fname = f"scenario{s+1}" + ("" if mvar == 60.0 else "_q40") + ".json"
            with open(os.path.join(DATA, fname), "w") as f:
                json.dump(scen, f, indent=1)

    np.set_printoptions(precision=17)
    V5, it5, mis5, ok5 = solve_nr(case5)
    print("case5: converged", ok5, "iters", it5, "mismatch", mis5)
    print("case5 v:", repr(np.abs(V5)))
    print("case5 delta:", repr(np.angle(V5)))
    p, q, i = branch_from_flow(case5, V5, 0)
    print("case5 ic0 from-flow p,q,i:", f"{p:.17g} {q:.17g} {i:.17g}")

    V34, it34, mis34, ok34 = solve_nr(case34)
    print("case34: converged", ok34, "iters", it34, "mismatch", mis34)
    print("case34 vmin/vmax:", np.abs(V34).min(), np.abs(V34).max())
    for e, k in enumerate(case34["interconnections"]):
        p, q, i = branch_from_flow(case34, V34, k)
        print(f"case34 ic{e} (branch {k}) from-flow p,q,i: {p:.17g} {q:.17g} {i:.17g}")

    _, ito, miso, oko = solve_nr(overload, max_iter=25)
    print("case5_overload: converged", oko, "iters", ito, "mismatch", miso)

    # counts for the JSON-counting cross-check
    print("case34 counts:", len(case34["buses"]), len(case34["branches"]),
          len(case34["interconnections"]))


if __name__ == "__main__":
    main()
