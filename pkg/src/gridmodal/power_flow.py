"""Newton-Raphson AC power flow in polar coordinates with voltage-dependent loads."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .exceptions import Diverged, SingularJacobian
from .system_model import BusKind, PowerSystemCase, build_ybus


@dataclass(frozen=True)
class PfOptions:
    tolerance: float = 1e-8
    max_iter: int = 30
    flat_start: bool = True

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(frozen=True)
class PowerFlowSolution:
    bus_ids: tuple
    v_mag: np.ndarray
    v_ang: np.ndarray
    p_inj: np.ndarray
    q_inj: np.ndarray
    iterations: int
    max_mismatch: float
    mismatch_history: List[float] = field(default_factory=list)

    @property
    def voltage(self) -> np.ndarray:
        return self.v_mag * np.exp(1j * self.v_ang)


class _LoadTable:
    """Vectorised view of a case's exponential loads, in system per-unit."""

    def __init__(self, case: PowerSystemCase):
        idx = case.index
        s = case.base.s_base
        self.n = case.n_bus
        self.bus = np.array([idx[ld.bus] for ld in case.loads], dtype=int)
        self.p0 = np.array([ld.p0 / s for ld in case.loads])
        self.q0 = np.array([ld.q0 / s for ld in case.loads])
        self.v0 = np.array([ld.v0 for ld in case.loads])
        self.a = np.array([ld.a for ld in case.loads])
        self.b = np.array([ld.b for ld in case.loads])

    def power(self, vm):
        """Complex load per bus and its derivative with respect to |V|."""
        s = np.zeros(self.n, dtype=complex)
        ds = np.zeros(self.n, dtype=complex)
        if self.bus.size:
            v = vm[self.bus] / self.v0
            p = self.p0 * v ** self.a
            q = self.q0 * v ** self.b
            dp = np.where(self.a != 0, self.a * self.p0 * v ** (self.a - 1) / self.v0, 0.0)
            dq = np.where(self.b != 0, self.b * self.q0 * v ** (self.b - 1) / self.v0, 0.0)
            np.add.at(s, self.bus, p + 1j * q)
            np.add.at(ds, self.bus, dp + 1j * dq)
        return s, ds


def scheduled_generation(case: PowerSystemCase) -> np.ndarray:
    """Active generation dispatch per bus in per-unit (slack entry left at zero)."""
    p = np.zeros(case.n_bus)
    idx = case.index
    for u in case.units:
        if u.p_set is not None:
            p[idx[u.bus]] += u.p_set / case.base.s_base
    return p


def _dsbus_dv(y, v):
    """Partial derivatives of V*conj(YV) with respect to angle and magnitude."""
    ibus = y @ v
    vnorm = v / np.abs(v)
    dv = np.diag(v)
    ds_dva = 1j * dv @ np.conj(np.diag(ibus) - y @ dv)
    ds_dvm = dv @ np.conj(y @ np.diag(vnorm)) + np.diag(np.conj(ibus) * vnorm)
    return ds_dva, ds_dvm


def solve_power_flow(case: PowerSystemCase, opts: Optional[PfOptions] = None) -> PowerFlowSolution:
    opts = opts or PfOptions()
    y = build_ybus(case)
    loads = _LoadTable(case)
    p_gen = scheduled_generation(case)
    kinds = [b.kind for b in case.buses]
    pv = [i for i, k in enumerate(kinds) if k is BusKind.PV]
    pq = [i for i, k in enumerate(kinds) if k is BusKind.PQ]
    pvpq = pv + pq
    slack = kinds.index(BusKind.SLACK)

    vm = np.ones(case.n_bus)
    va = np.zeros(case.n_bus)
    for i, b in enumerate(case.buses):
        if b.v_set is not None:
            vm[i] = b.v_set
    va[slack] = case.buses[slack].angle_set or 0.0
    va[:] = va[slack]
    if not opts.flat_start and pvpq:
        # DC estimate of the angles
        p_net = p_gen - loads.power(vm)[0].real
        bdc = -y.imag[np.ix_(pvpq, pvpq)]
        try:
            va[pvpq] += np.linalg.solve(bdc, p_net[pvpq])
        except np.linalg.LinAlgError:
            pass

    npvpq, npq = len(pvpq), len(pq)

    def mismatch(vm, va):
        v = vm * np.exp(1j * va)
        s_load, ds_load = loads.power(vm)
        mis = v * np.conj(y @ v) - p_gen + s_load
        f = np.concatenate([mis.real[pvpq], mis.imag[pq]])
        return v, f, ds_load

    history = []
    v, f, ds_load = mismatch(vm, va)
    norm = float(np.max(np.abs(f))) if f.size else 0.0
    history.append(norm)
    it = 0
    while norm > opts.tolerance:
        if it >= opts.max_iter:
            raise Diverged(it, norm)
        it += 1
        ds_dva, ds_dvm = _dsbus_dv(y, v)
        ds_dvm = ds_dvm + np.diag(ds_load)
        jac = np.block([
            [ds_dva.real[np.ix_(pvpq, pvpq)], ds_dvm.real[np.ix_(pvpq, pq)]],
            [ds_dva.imag[np.ix_(pq, pvpq)], ds_dvm.imag[np.ix_(pq, pq)]],
        ])
        try:
            dx = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            raise SingularJacobian(it) from None
        if not np.all(np.isfinite(dx)):
            raise SingularJacobian(it)
        va[pvpq] += dx[:npvpq]
        vm[pq] += dx[npvpq:npvpq + npq]
        if np.any(vm <= 0) or not np.all(np.isfinite(vm)):
            raise Diverged(it, float("inf"))
        v, f, ds_load = mismatch(vm, va)
        norm = float(np.max(np.abs(f)))
        history.append(norm)

    s_inj = v * np.conj(y @ v)
    return PowerFlowSolution(
        bus_ids=tuple(b.id for b in case.buses),
        v_mag=vm.copy(), v_ang=va.copy(),
        p_inj=s_inj.real.copy(), q_inj=s_inj.imag.copy(),
        iterations=it, max_mismatch=norm, mismatch_history=history,
    )


def bus_injection(case: PowerSystemCase, v_mag, v_ang, bus: int):
    """Net complex injection ``V_i conj(sum_j Y_ij V_j)`` at bus id ``bus``, per-unit."""
    y = build_ybus(case)
    v = np.asarray(v_mag) * np.exp(1j * np.asarray(v_ang))
    i = case.index[bus]
    s = v[i] * np.conj(y[i] @ v)
    return float(s.real), float(s.imag)


def load_at_solution(case: PowerSystemCase, sol: PowerFlowSolution) -> np.ndarray:
    """Complex load per bus (per-unit) evaluated at the solved magnitudes."""
    return _LoadTable(case).power(sol.v_mag)[0]


def generation_at_solution(case: PowerSystemCase, sol: PowerFlowSolution) -> np.ndarray:
    """Complex generator output per bus: net injection plus local load."""
    return sol.p_inj + 1j * sol.q_inj + load_at_solution(case, sol)


def branch_losses(case: PowerSystemCase, sol: PowerFlowSolution) -> float:
    """Total active loss summed branch by branch (series and shunt elements)."""
    from .system_model import branch_pi

    idx = case.index
    v = sol.voltage
    total = 0.0
    for br in case.branches:
        pi = branch_pi(br, case.base.f_nominal)
        vi, vj = v[idx[br.from_bus]], v[idx[br.to_bus]]
        i_series = (vi - vj) / pi.z_series
        total += (abs(i_series) ** 2 * pi.z_series).real
        total += (pi.y_shunt / 2).real * (abs(vi) ** 2 + abs(vj) ** 2)
    return total
