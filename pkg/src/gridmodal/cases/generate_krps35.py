"""Generate the bundled ``krps35.case`` surrogate network.

The 35-bus, 53-branch, 132 kV grid is synthetic.  Only its headline
statistics are fixed: six generating stations with the ratings below, 29
load buses sharing 2202 MW according to ``LOAD_TABLE_MW``, and 14 lines
longer than 25 km.  Topology is a ring of station buses with three chords,
each load bus hanging off one station with 15 of them tied to a second
one, so every bus is at most four hops from every other.  Line lengths are
drawn from a fixed seed.

Run ``python3 -m gridmodal.cases.generate_krps35`` to rewrite the file.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

SEED = 35132
KV = 132.0

#: per-km constants of a single-circuit 132 kV overhead line
R_OHM_KM, X_OHM_KM, B_US_KM = 0.12, 0.40, 2.85

#: load power factor used for every load bus
LOAD_PF = 0.985

# name, rating MVA, dispatch MW (None on the slack), governor, vset
STATIONS = (
    ("Dokan", 400.0, None, "hydro", 1.04),
    ("Darbandikhan", 249.0, 240.0, "hydro", 1.03),
    ("Perdawood", 500.0, 495.0, "gas", 1.04),
    ("Chamchamal", 750.0, 740.0, "gas", 1.04),
    ("Duhok", 200.0, 198.0, "gas", 1.03),
    ("TaqTaq", 200.0, 198.0, "gas", 1.03),
)

#: MW at load buses 7..35; sums to 2202
LOAD_TABLE_MW = (120, 95, 60, 45, 110, 70, 85, 40, 65, 170, 55, 90, 35, 75, 100,
                 50, 80, 60, 45, 150, 70, 40, 85, 55, 95, 60, 65, 50, 82)

N_TIES = 15
N_LONG_TIES = 5

HYDRO_MACHINE = ("h=4.5 d=0 xd=1.05 xd_p=0.33 xd_pp=0.28 xq=0.68 xq_p=0.45 xq_pp=0.36 "
                 "xls=0.16 rs=0.003 tdo_p=6.5 tdo_pp=0.008 tqo_p=0.9 tqo_pp=0.008")
GAS_MACHINE = ("h=5.0 d=0 xd=1.80 xd_p=0.25 xd_pp=0.18 xq=1.70 xq_p=0.40 xq_pp=0.18 "
               "xls=0.12 rs=0.003 tdo_p=7.0 tdo_pp=0.015 tqo_p=0.6 tqo_pp=0.015")
EXCITER = "st1a tr=0.02 ka=100 tb=0 tc=0 efd_min=-6 efd_max=6"
HYDRO_GOV = ("hydro kp=1.2 ki=0.25 kd=0.0 td=0.05 ta_servo=0.25 g_min=0.01 g_max=1.2 "
             "rate_limit=0.15 tw=1.4 at=1.2 q_nl=0.08 r_perm=0.05")
GAS_GOV = "gas r_droop=0.05 t_valve=0.05 t_comb=0.2 t_turb=0.6 f_min=0 f_max=1.2"
PSS = "f_l=0.1 f_i=8.0 f_h=12 k_l=0.5 k_i=60 k_h=20 vs_min=-0.15 vs_max=0.15"


def _branch_line(f, t, length):
    return (f"BRANCH from={f} to={t} r_ohm={R_OHM_KM * length:.4f} "
            f"x_ohm={X_OHM_KM * length:.4f} b_us={B_US_KM * length:.4f} len={length:.1f}")


def build_branches(rng):
    n_st = len(STATIONS)
    hub_pairs = [(i + 1, (i + 1) % n_st + 1) for i in range(n_st)]
    hub_pairs += [(i + 1, i + 1 + n_st // 2) for i in range(n_st // 2)]
    out = [(f, t, float(np.round(rng.uniform(28.0, 55.0), 1))) for f, t in hub_pairs]

    load_buses = list(range(n_st + 1, n_st + 1 + len(LOAD_TABLE_MW)))
    primary = {}
    for k, bus in enumerate(load_buses):
        hub = k % n_st + 1
        primary[bus] = hub
        out.append((hub, bus, float(np.round(rng.uniform(4.0, 20.0), 1))))

    tied = sorted(rng.choice(load_buses, size=N_TIES, replace=False).tolist())
    long_ties = set(rng.choice(tied, size=N_LONG_TIES, replace=False).tolist())
    for bus in tied:
        second = primary[bus] % n_st + 1
        lo, hi = (26.0, 40.0) if bus in long_ties else (8.0, 22.0)
        out.append((second, bus, float(np.round(rng.uniform(lo, hi), 1))))
    return out


def render() -> str:
    rng = np.random.default_rng(SEED)
    lines = [
        "# Synthetic 35-bus 132 kV surrogate with six generating stations.",
        "# Generated by generate_krps35.py; edit the script, not this file.",
        "SYSTEM s_base=100 f=50",
        "",
    ]
    for i, (name, _, _, _, vset) in enumerate(STATIONS, start=1):
        kind = "slack" if i == 1 else "pv"
        angle = " angle=0" if i == 1 else ""
        lines.append(f"BUS id={i} name={name} kind={kind} kv={KV:g} vset={vset:.3f}{angle}")
    first_load = len(STATIONS) + 1
    for k in range(len(LOAD_TABLE_MW)):
        lines.append(f"BUS id={first_load + k} name=L{first_load + k:02d} kind=pq kv={KV:g}")
    lines.append("")

    for f, t, length in build_branches(rng):
        lines.append(_branch_line(f, t, length))
    lines.append("")

    tan_phi = np.tan(np.arccos(LOAD_PF))
    for k, p in enumerate(LOAD_TABLE_MW):
        lines.append(f"LOAD bus={first_load + k} p0={p:g} q0={p * tan_phi:.2f} a=1 b=2")
    lines.append("")

    for i, (name, mva, p_mw, gov, _) in enumerate(STATIONS, start=1):
        pset = "" if p_mw is None else f" pset={p_mw:g}"
        machine = HYDRO_MACHINE if gov == "hydro" else GAS_MACHINE
        governor = HYDRO_GOV if gov == "hydro" else GAS_GOV
        lines.append(f"UNIT bus={i} name={name} mva={mva:g}{pset}")
        lines.append(f"    machine{{{machine}}}")
        lines.append(f"    exciter{{{EXCITER}}}")
        lines.append(f"    governor{{{governor}}}")
        lines.append(f"    pss{{{PSS}}}")
    return "\n".join(lines) + "\n"


def main(path=None):
    path = Path(path) if path else Path(__file__).with_name("krps35.case")
    path.write_text(render())
    return path


if __name__ == "__main__":
    print(main())
