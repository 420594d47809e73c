"""Static loads, line equivalents, per-unit conversion and Y-bus assembly."""

from __future__ import annotations

import cmath
from typing import NamedTuple

import numpy as np

from ..exceptions import DegenerateLine, NonPositiveVoltage
from .case import Branch, LineModel, LoadModel, PowerSystemCase


def load_power(load: LoadModel, v):
    """Exponential static load: returns (p MW, q MVAr) at voltage magnitude ``v``."""
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr <= 0):
        raise NonPositiveVoltage(f"load at bus {load.bus}: voltage must be positive")
    ratio = v_arr / load.v0
    p = load.p0 * ratio ** load.a
    q = load.q0 * ratio ** load.b
    if np.ndim(p) == 0:
        return float(p), float(q)
    return p, q


class PiSection(NamedTuple):
    r: float
    x: float
    g_shunt: float
    b_shunt: float

    @property
    def z_series(self) -> complex:
        return complex(self.r, self.x)

    @property
    def y_shunt(self) -> complex:
        return complex(self.g_shunt, self.b_shunt)


def long_line_to_pi(r_per_km, x_per_km, b_per_km, length_km, f, f_nominal=None) -> PiSection:
    """Exact PI equivalent of a uniform line of ``length_km``.

    Per-km reactance and susceptance are taken at ``f_nominal`` (defaults to
    ``f``) and scaled to the evaluation frequency ``f``.  The series branch is
    ``Zc sinh(gl)`` and the total shunt ``2 tanh(gl/2) / Zc``.
    """
    if length_km <= 0:
        raise ValueError("length_km must be positive")
    if r_per_km == 0 and x_per_km == 0 and b_per_km == 0:
        raise DegenerateLine("all per-km line parameters are zero")
    scale = 1.0 if f_nominal is None else f / f_nominal
    z = complex(r_per_km, x_per_km * scale)
    y = complex(0.0, b_per_km * scale)
    if y == 0:
        # no charging: the distributed line is exactly its lumped series impedance
        zs = z * length_km
        return PiSection(zs.real, zs.imag, 0.0, 0.0)
    if z == 0:
        ys = y * length_km
        return PiSection(0.0, 0.0, ys.real, ys.imag)
    gl = cmath.sqrt(z * y) * length_km
    zc = cmath.sqrt(z / y)
    zs = zc * cmath.sinh(gl)
    ysh = 2.0 * cmath.tanh(gl / 2.0) / zc
    return PiSection(zs.real, zs.imag, ysh.real, ysh.imag)


def branch_pi(branch: Branch, f: float) -> PiSection:
    """PI parameters actually stamped into the network for ``branch``."""
    if branch.model is LineModel.DISTRIBUTED_EXACT_PI:
        ell = branch.length_km
        return long_line_to_pi(branch.r / ell, branch.x / ell, branch.b_shunt / ell, ell, f)
    return PiSection(branch.r, branch.x, 0.0, branch.b_shunt)


def build_ybus(case: PowerSystemCase) -> np.ndarray:
    n = case.n_bus
    idx = case.index
    y = np.zeros((n, n), dtype=complex)
    for br in case.branches:
        pi = branch_pi(br, case.base.f_nominal)
        i, j = idx[br.from_bus], idx[br.to_bus]
        ys = 1.0 / pi.z_series
        half = pi.y_shunt / 2.0
        y[i, i] += ys + half
        y[j, j] += ys + half
        y[i, j] -= ys
        y[j, i] -= ys
    return y


# -- per-unit conversion ------------------------------------------------------------

def z_base(kv: float, s_base: float) -> float:
    return kv * kv / s_base


def branch_to_physical(branch: Branch, kv: float, s_base: float) -> dict:
    """Branch totals in ohms and microsiemens."""
    zb = z_base(kv, s_base)
    return {"r_ohm": branch.r * zb, "x_ohm": branch.x * zb, "b_us": branch.b_shunt / zb * 1e6}


def branch_from_physical(values: dict, kv: float, s_base: float) -> dict:
    zb = z_base(kv, s_base)
    return {"r": values["r_ohm"] / zb, "x": values["x_ohm"] / zb,
            "b_shunt": values["b_us"] * 1e-6 * zb}


def effective_impedance(case: PowerSystemCase) -> np.ndarray:
    """Pairwise driving-point impedance between buses through the series network.

    Uses the pseudo-inverse of the series-admittance Laplacian; shunts are
    excluded so the result measures electrical distance only.
    """
    n = case.n_bus
    idx = case.index
    lap = np.zeros((n, n), dtype=complex)
    for br in case.branches:
        ys = 1.0 / branch_pi(br, case.base.f_nominal).z_series
        i, j = idx[br.from_bus], idx[br.to_bus]
        lap[i, i] += ys
        lap[j, j] += ys
        lap[i, j] -= ys
        lap[j, i] -= ys
    zp = np.linalg.pinv(lap)
    d = np.diag(zp)
    return d[:, None] + d[None, :] - zp - zp.T
