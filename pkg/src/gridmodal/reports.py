"""CSV, manifest and SVG writers.

All numeric output goes through :func:`fmt` so reruns with the same inputs
produce byte-identical files.  Figures use the Agg backend with a fixed
SVG hash salt and no date stamp for the same reason.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import __version__  # noqa: E402

PF_COLUMNS = ("bus_id", "v_pu", "angle_deg", "p_inj_mw", "q_inj_mvar")
MODAL_COLUMNS = ("re", "im", "freq_hz", "damping_ratio", "category",
                 "dominant_state_1", "p_1", "dominant_state_2", "p_2")

#: quantities plotted by default after a simulation
PLOT_QUANTITIES = ("omega", "delta", "p_accel", "p_elec", "v_terminal", "efd", "vs_pss")

_SVG_META = {"Date": None, "Creator": None}


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    v = float(value)
    if v == 0.0:
        v = 0.0  # drop the sign of negative zero
    return f"{v:.12g}"


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# -- CSV ------------------------------------------------------------------------------

def write_pf_csv(path, pf, s_base: float = 100.0):
    rows = [(bid, vm, np.degrees(va), p * s_base, q * s_base)
            for bid, vm, va, p, q in zip(pf.bus_ids, pf.v_mag, pf.v_ang, pf.p_inj, pf.q_inj)]
    return _write_rows(Path(path), PF_COLUMNS, rows)


def modal_rows(result):
    """One row per eigenvalue; conjugate pairs appear as adjacent +im, -im rows."""
    rows = []
    for md in result.modes:
        dom = list(md.dominant_states) + [("", 0.0)] * (2 - len(md.dominant_states))
        tail = (md.freq_hz, md.damping_ratio, md.category.value,
                dom[0][0], dom[0][1], dom[1][0], dom[1][1])
        rows.append((md.lam.real, md.lam.imag) + tail)
        if md.lam.imag > 0:
            rows.append((md.lam.real, -md.lam.imag) + tail)
    return rows


def write_modal_csv(path, result):
    return _write_rows(Path(path), MODAL_COLUMNS, modal_rows(result))


def write_timeseries_csv(path, ts):
    cols = ts.columns
    names = list(cols)
    data = np.column_stack([ts.t] + [cols[n] for n in names])
    return _write_rows(Path(path), ["t_s"] + names, data)


def write_state_catalog(path, system):
    return _write_rows(Path(path), ("index", "state"), enumerate(system.state_names))


# -- manifest -------------------------------------------------------------------------

def write_manifest(path, command: str, case_path, options: dict, output_dir, outputs):
    """Small JSON record of what produced an output set."""
    case_path = Path(case_path)
    doc = {
        "tool": "gridmodal",
        "tool_version": __version__,
        "command": command,
        "case_path": str(case_path),
        "case_sha256": file_sha256(case_path),
        "options": options,
        "output_dir": str(output_dir),
        "outputs": [Path(p).name for p in outputs],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


# -- figures --------------------------------------------------------------------------

def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": "gridmodal", "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path


def plot_eigenvalues(path, result, n_labels: int = 5, title: str = ""):
    """Eigenvalue map: unstable half-plane shaded, least-damped modes labelled."""
    lam = np.asarray(result.eigenvalues)
    fig, ax = plt.subplots(figsize=(7, 5))
    re_span = max(1.0, float(np.max(np.abs(lam.real))) if lam.size else 1.0)
    im_span = max(1.0, float(np.max(np.abs(lam.imag))) if lam.size else 1.0)
    left = -1.05 * re_span
    right = max(0.1 * re_span, 1.1 * float(lam.real.max()) if lam.size else 1.0)
    ax.axvspan(0, right, color="tab:red", alpha=0.12, lw=0)
    ax.axvline(0, color="k", lw=0.8)
    ax.axhline(0, color="0.6", lw=0.5)
    ax.plot(lam.real, lam.imag, "x", color="tab:blue", ms=5)
    osc = [md for md in result.modes if md.lam.imag > 0 and not md.structural_zero]
    # labels stacked in a column with leader lines, so clustered modes stay readable
    picked = sorted(osc, key=lambda m: m.damping_ratio)[:n_labels]
    for k, md in enumerate(sorted(picked, key=lambda m: -m.lam.imag)):
        ax.annotate(f"{md.freq_hz:.2f} Hz, \u03b6={100 * md.damping_ratio:.1f}%",
                    (md.lam.real, md.lam.imag), textcoords="axes fraction",
                    xytext=(0.04, 0.95 - 0.06 * k), fontsize=7, va="center",
                    bbox=dict(boxstyle="round,pad=0.2", fc="white", ec="0.7", lw=0.5),
                    arrowprops=dict(arrowstyle="-", color="0.5", lw=0.5))
    ax.set_xlim(left, right)
    ax.set_ylim(-1.1 * im_span, 1.1 * im_span)
    ax.set_xlabel("real part (1/s)")
    ax.set_ylabel("imaginary part (rad/s)")
    if title:
        ax.set_title(title)
    ax.grid(True, lw=0.3)
    fig.tight_layout()
    return _save(fig, path)


def plot_timeseries(path, ts, quantity: str, title: str = ""):
    cols = ts.columns
    fig, ax = plt.subplots(figsize=(7, 4))
    for name in ts.system.unit_names:
        ax.plot(ts.t, cols[f"{name}.{quantity}"], lw=0.9, label=name)
    ax.set_xlabel("time (s)")
    ax.set_ylabel(quantity)
    if title:
        ax.set_title(title)
    ax.grid(True, lw=0.3)
    if len(ts.system.unit_names) > 1:
        ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)
