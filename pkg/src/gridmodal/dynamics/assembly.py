"""Assembly of the multi-machine differential-algebraic model.

Differential states are ordered unit by unit (machine, exciter, governor,
stabilizer).  Algebraic variables are the real parts of all bus voltages
followed by the imaginary parts.  Inputs are two references per unit:
``pm_ref`` (gate reference for hydro, power reference for gas, torque for
units without governor) and ``v_ref`` (exciter set point, or the field
voltage itself for units without exciter).
"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

import numpy as np

from ..exceptions import (InitializationFailed, LimitBindingAtEquilibrium,
                          NoGeneratorAtPvBus)
from ..power_flow import PowerFlowSolution, _LoadTable, generation_at_solution
from ..system_model import BusKind, PowerSystemCase, build_ybus
from . import controls
from .machine import (MachineState, dq_to_network, electrical_torque, machine_derivatives,
                      network_to_dq, stator_algebraic)
from .params import (ExciterST1A, GasGovernor, HydroGovernor, NoGovernor,
                     stack)

MACHINE_STATES = ("delta", "omega", "eq_p", "ed_p", "psi_1d", "psi_2q")
HYDRO_STATES = ("gov_int", "gov_der", "gate", "flow")
GAS_STATES = ("valve", "combustor", "turbine")
INPUTS = ("pm_ref", "v_ref")

#: infinity-norm bound on the DAE residual at the initial point
EQUILIBRIUM_TOL = 1e-6


class DynamicSystem:
    """Assembled DAE ``x' = f(x, y, u)``, ``0 = g(x, y, u)`` with its equilibrium."""

    def __init__(self, case: PowerSystemCase):
        self.case = case
        self.omega_s = case.base.omega_s
        self.s_base = case.base.s_base
        self.units = case.units
        self.n_bus = case.n_bus
        self.unit_names = [u.name for u in case.units]
        bus_index = case.index

        names: List[Tuple[str, str]] = []

        def add(unit, state):
            names.append((unit, state))
            return len(names) - 1

        m = len(case.units)
        self._mach = np.zeros((6, m), dtype=int)
        exc_units, exc_vm, exc_ll_units, exc_ll = [], [], [], []
        hyd_units, hyd_idx, gas_units, gas_idx, pss_units, pss_idx = [], [], [], [], [], []
        for k, u in enumerate(case.units):
            for j, st in enumerate(MACHINE_STATES):
                self._mach[j, k] = add(u.name, st)
            if isinstance(u.exciter, ExciterST1A):
                exc_units.append(k)
                exc_vm.append(add(u.name, "exc_vm"))
                if u.exciter.has_lead_lag:
                    exc_ll_units.append(len(exc_units) - 1)
                    exc_ll.append(add(u.name, "exc_ll"))
            if isinstance(u.governor, HydroGovernor):
                hyd_units.append(k)
                hyd_idx.append([add(u.name, st) for st in HYDRO_STATES])
            elif isinstance(u.governor, GasGovernor):
                gas_units.append(k)
                gas_idx.append([add(u.name, st) for st in GAS_STATES])
            if u.pss is not None:
                pss_units.append(k)
                pss_idx.append([add(u.name, "pss_" + st) for st in controls.PSS_STATES])

        self.state_names = [f"{u}.{s}" for u, s in names]
        self.state_index: Dict[Tuple[str, str], int] = {key: i for i, key in enumerate(names)}
        self.n_x = len(names)

        self.algebraic_names = ([f"bus{b.id}.re" for b in case.buses]
                                + [f"bus{b.id}.im" for b in case.buses])
        self.algebraic_index = {}
        for i, b in enumerate(case.buses):
            self.algebraic_index[(b.id, "re")] = i
            self.algebraic_index[(b.id, "im")] = self.n_bus + i
        self.n_y = 2 * self.n_bus

        self.input_names = [f"{u.name}.{inp}" for u in case.units for inp in INPUTS]
        self.input_index = {(u.name, inp): 2 * k + j
                            for k, u in enumerate(case.units) for j, inp in enumerate(INPUTS)}
        self.n_u = 2 * m

        # stacked parameters on the system base
        self.mva = np.array([u.mva_base for u in case.units], dtype=float)
        self.machine = stack([u.machine.to_system_base(u.mva_base, self.s_base)
                              for u in case.units]) if m else None
        self.gen_bus = np.array([bus_index[u.bus] for u in case.units], dtype=int)

        self._exc_units = np.array(exc_units, dtype=int)
        self._exc_vm = np.array(exc_vm, dtype=int)
        self._exc_ll_units = np.array(exc_ll_units, dtype=int)
        self._exc_ll = np.array(exc_ll, dtype=int)
        self.exciter = stack([case.units[k].exciter for k in exc_units]) if exc_units else None
        self._noexc_units = np.array([k for k in range(m) if k not in set(exc_units)], dtype=int)

        self._hyd_units = np.array(hyd_units, dtype=int)
        self._hyd_idx = np.array(hyd_idx, dtype=int).T.reshape(4, -1)
        self.hydro = stack([case.units[k].governor for k in hyd_units]) if hyd_units else None
        self._gas_units = np.array(gas_units, dtype=int)
        self._gas_idx = np.array(gas_idx, dtype=int).T.reshape(3, -1)
        self.gas = stack([case.units[k].governor for k in gas_units]) if gas_units else None
        self._nogov_units = np.array(
            [k for k, u in enumerate(case.units) if isinstance(u.governor, NoGovernor)], dtype=int)
        self._pss_units = np.array(pss_units, dtype=int)
        self._pss_idx = np.array(pss_idx, dtype=int).T.reshape(12, -1)
        self.pss = stack([case.units[k].pss for k in pss_units]) if pss_units else None

        # network
        self.ybus = build_ybus(case)
        self._loads = _LoadTable(case)
        unit_buses = set(u.bus for u in case.units)
        self._infinite = np.array(
            [i for i, b in enumerate(case.buses)
             if b.kind is BusKind.SLACK and b.id not in unit_buses], dtype=int)
        self._v_fixed = np.zeros(len(self._infinite), dtype=complex)

        self.x0 = np.zeros(self.n_x)
        self.y0 = np.zeros(self.n_y)
        self.u0 = np.zeros(self.n_u)

    # -- evaluation ---------------------------------------------------------------

    def _machine_state(self, x):
        im = self._mach
        return MachineState(*(x[im[j]] for j in range(6)))

    def evaluate(self, x, y, u, outputs=False):
        """Return ``(f, g)``, plus a dict of internal signals when ``outputs``."""
        n = self.n_bus
        m = len(self.units)
        v = y[:n] + 1j * y[n:]
        f = np.zeros(self.n_x)

        inj = np.zeros(n, dtype=complex)
        if m:
            p = self.machine
            s = self._machine_state(x)
            vt = v[self.gen_bus]
            vd, vq = network_to_dq(vt, s.delta)
            id, iq = stator_algebraic(p, s, vd, vq)
            speed_dev = (s.omega - self.omega_s) / self.omega_s
            vmag = np.abs(vt)
            pm_ref = u[0::2]
            v_ref = u[1::2]

            vs = np.zeros(m)
            if self.pss is not None:
                ip = self._pss_idx
                d_pss, vs_p = controls.pss_derivatives(self.pss, x[ip], speed_dev[self._pss_units])
                f[ip] = np.array(d_pss)
                vs[self._pss_units] = vs_p

            efd = np.zeros(m)
            if self.exciter is not None:
                ue = self._exc_units
                x_ll = np.zeros(len(ue))
                x_ll[self._exc_ll_units] = x[self._exc_ll]
                (d_vm, d_ll), efd_e = controls.exciter_derivatives(
                    self.exciter, (x[self._exc_vm], x_ll), vmag[ue], v_ref[ue], vs[ue])
                f[self._exc_vm] = d_vm
                f[self._exc_ll] = np.asarray(d_ll)[self._exc_ll_units]
                efd[ue] = efd_e
            efd[self._noexc_units] = v_ref[self._noexc_units]

            tm_mach = np.zeros(m)
            if self.hydro is not None:
                ih = self._hyd_idx
                uh = self._hyd_units
                d_h, tm_h = controls.hydro_derivatives(self.hydro, x[ih], speed_dev[uh], pm_ref[uh])
                f[ih] = np.array(d_h)
                tm_mach[uh] = tm_h
            if self.gas is not None:
                ig = self._gas_idx
                ug = self._gas_units
                d_g, tm_g = controls.gas_derivatives(self.gas, x[ig], speed_dev[ug], pm_ref[ug])
                f[ig] = np.array(d_g)
                tm_mach[ug] = tm_g
            tm_mach[self._nogov_units] = pm_ref[self._nogov_units]
            tm = tm_mach * self.mva / self.s_base

            d_m = machine_derivatives(p, s, id, iq, efd, tm, self.omega_s)
            f[self._mach] = np.array(d_m)

            i_gen = dq_to_network(id, iq, s.delta)
            np.add.at(inj, self.gen_bus, i_gen)

        s_load = self._loads.power(np.abs(v))[0]
        mis = self.ybus @ v - inj + np.conj(s_load / v)
        if self._infinite.size:
            mis[self._infinite] = v[self._infinite] - self._v_fixed
        g = np.concatenate([mis.real, mis.imag])
        if not outputs:
            return f, g

        out = {"v_bus": v}
        if m:
            te = electrical_torque(p, s, id, iq)
            i_gen = dq_to_network(id, iq, s.delta)
            to_mach = self.s_base / self.mva
            out.update(
                delta=s.delta, omega=s.omega, id=id, iq=iq, vd=vd, vq=vq, efd=efd, vs=vs,
                v_terminal=vmag, tm=tm * to_mach, te=te * to_mach,
                p_elec=(vt * np.conj(i_gen)).real * to_mach,
                q_elec=(vt * np.conj(i_gen)).imag * to_mach,
            )
            out["p_accel"] = out["tm"] - out["te"]
        return f, g, out

    def residual_norm(self, x=None, y=None, u=None) -> float:
        x = self.x0 if x is None else x
        y = self.y0 if y is None else y
        u = self.u0 if u is None else u
        f, g = self.evaluate(x, y, u)
        return float(max(np.max(np.abs(f), initial=0.0), np.max(np.abs(g), initial=0.0)))

    def state_catalog_rows(self):
        return [(name, i) for i, name in enumerate(self.state_names)]

    @property
    def has_infinite_bus(self) -> bool:
        return bool(self._infinite.size)

    def unit_position(self, name: str) -> int:
        return self.unit_names.index(name)


def init_dynamics(case: PowerSystemCase, pf: PowerFlowSolution, system: Optional[DynamicSystem] = None):
    """Back-solve every unit's equilibrium from the power-flow operating point."""
    sys_ = system if system is not None else DynamicSystem(case)
    idx = case.index
    unit_buses = {u.bus for u in case.units}
    for b in case.buses:
        if b.kind is BusKind.PV and b.id not in unit_buses:
            raise NoGeneratorAtPvBus(f"PV bus {b.id} has no generating unit")

    v_bus = pf.voltage
    s_gen = generation_at_solution(case, pf)
    x0 = np.zeros(sys_.n_x)
    u0 = np.zeros(sys_.n_u)
    ws = case.base.omega_s

    for k, unit in enumerate(case.units):
        p = unit.machine.to_system_base(unit.mva_base, case.base.s_base)
        bi = idx[unit.bus]
        vt = v_bus[bi]
        cur = np.conj(s_gen[bi] / vt)
        delta = float(np.angle(vt + complex(p.rs, p.xq) * cur))
        vd, vq = network_to_dq(vt, delta)
        id, iq = network_to_dq(cur, delta)
        vd, vq, id, iq = float(vd), float(vq), float(id), float(iq)

        ed_p = (p.xq - p.xq_p) * iq
        psi_2q = ed_p + (p.xq_p - p.xls) * iq
        eq_p = vq + p.rs * iq + p.xd_p * id
        psi_1d = eq_p - (p.xd_p - p.xls) * id
        efd = eq_p + (p.xd - p.xd_p) * id
        state = MachineState(delta, ws, eq_p, ed_p, psi_1d, psi_2q)
        tm_sys = float(electrical_torque(p, state, id, iq))
        tm = tm_sys * case.base.s_base / unit.mva_base

        for j, value in enumerate(state.as_tuple()):
            x0[sys_.state_index[(unit.name, MACHINE_STATES[j])]] = value

        name = unit.name
        exc = unit.exciter
        if isinstance(exc, ExciterST1A):
            (vm, x_ll), v_ref = controls.exciter_equilibrium(exc, abs(vt), efd)
            if not controls.inside_limits(efd, exc.efd_min, exc.efd_max):
                raise LimitBindingAtEquilibrium(name, "efd", efd)
            x0[sys_.state_index[(name, "exc_vm")]] = vm
            if exc.has_lead_lag:
                x0[sys_.state_index[(name, "exc_ll")]] = x_ll
        else:
            v_ref = efd
        gov = unit.governor
        if isinstance(gov, HydroGovernor):
            states, pm_ref = controls.hydro_equilibrium(gov, tm)
            if not controls.inside_limits(states[2], gov.g_min, gov.g_max):
                raise LimitBindingAtEquilibrium(name, "gate", states[2])
            for st, value in zip(HYDRO_STATES, states):
                x0[sys_.state_index[(name, st)]] = value
        elif isinstance(gov, GasGovernor):
            states, pm_ref = controls.gas_equilibrium(gov, tm)
            if not controls.inside_limits(pm_ref, gov.f_min, gov.f_max):
                raise LimitBindingAtEquilibrium(name, "fuel", pm_ref)
            for st, value in zip(GAS_STATES, states):
                x0[sys_.state_index[(name, st)]] = value
        else:
            pm_ref = tm
        if unit.pss is not None and not controls.inside_limits(0.0, unit.pss.vs_min, unit.pss.vs_max):
            raise LimitBindingAtEquilibrium(name, "vs", 0.0)
        u0[sys_.input_index[(name, "pm_ref")]] = pm_ref
        u0[sys_.input_index[(name, "v_ref")]] = v_ref

    y0 = np.concatenate([v_bus.real, v_bus.imag])
    return x0, y0, u0


def assemble(case: PowerSystemCase, pf: PowerFlowSolution) -> DynamicSystem:
    system = DynamicSystem(case)
    x0, y0, u0 = init_dynamics(case, pf, system)
    system._v_fixed = pf.voltage[system._infinite]
    system.x0, system.y0, system.u0 = x0, y0, u0
    f, g = system.evaluate(x0, y0, u0)
    worst_f = int(np.argmax(np.abs(f))) if f.size else 0
    worst_g = int(np.argmax(np.abs(g)))
    res_f = float(abs(f[worst_f])) if f.size else 0.0
    res_g = float(abs(g[worst_g]))
    if max(res_f, res_g) >= EQUILIBRIUM_TOL:
        where = system.state_names[worst_f] if res_f >= res_g else system.algebraic_names[worst_g]
        raise InitializationFailed(where, max(res_f, res_g))
    return system
