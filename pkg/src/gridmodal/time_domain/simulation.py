"""Event-driven time-domain simulation of an assembled system."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import NewtonFailure, StepUnderflow, UnknownTarget
from .trbdf2 import IterationMatrix, error_norm, trbdf2_step

H_MIN = 1e-10

QUANTITIES = {"mechanical_power_ref": "pm_ref", "voltage_ref": "v_ref",
              "pm": "pm_ref", "vref": "v_ref"}

UNIT_COLUMNS = ("delta", "omega", "v_terminal", "p_elec", "p_accel", "efd", "vs_pss")


@dataclass(frozen=True)
class StepRelative:
    fraction: float

    def __post_init__(self):
        if not self.fraction > -1:
            raise ValueError("relative step must exceed -100 %")

    def apply(self, value):
        return value * (1.0 + self.fraction)


@dataclass(frozen=True)
class StepAbsolute:
    amount: float

    def apply(self, value):
        return value + self.amount


@dataclass(frozen=True)
class Event:
    time: float
    target: Tuple[str, str]
    change: Union[StepRelative, StepAbsolute]

    def __post_init__(self):
        if self.time < 0:
            raise ValueError("event time must be non-negative")


@dataclass(frozen=True)
class SimOptions:
    t_end: float
    max_step: float = 0.02
    rel_tol: float = 1e-6
    abs_tol: float = 1e-8
    output_dt: float = 0.02

    def __post_init__(self):
        if not (self.t_end > 0 and self.max_step > 0 and self.output_dt > 0):
            raise ValueError("t_end, max_step and output_dt must be positive")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")


EVENT_GRAMMAR = "target:quantity:[+|-]value[%]@time, quantity one of pm, vref"

_EVENT_RE = re.compile(
    r"^(?P<target>[A-Za-z_][\w.-]*):(?P<qty>pm|vref):"
    r"(?P<value>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<pct>%)?"
    r"@(?P<time>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)$")


def parse_event(text: str) -> Event:
    """Parse ``G1:pm:+5%@40`` style event strings.

    A trailing ``%`` makes the change relative to the pre-event value;
    otherwise it is added in per unit.
    """
    m = _EVENT_RE.match(text.strip())
    if m is None:
        raise ValueError(f"bad event {text!r}; expected {EVENT_GRAMMAR}")
    value = float(m["value"])
    change = StepRelative(value / 100.0) if m["pct"] else StepAbsolute(value)
    return Event(float(m["time"]), (m["target"], m["qty"]), change)


def apply_event(system, u: np.ndarray, event: Event) -> np.ndarray:
    unit, quantity = event.target
    key = (unit, QUANTITIES.get(quantity, quantity))
    if key not in system.input_index:
        raise UnknownTarget(f"no input {quantity!r} on unit {unit!r}")
    out = u.copy()
    i = system.input_index[key]
    out[i] = event.change.apply(out[i])
    return out


@dataclass
class TimeSeries:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    system: object = field(repr=False)
    steps: int = 0

    @cached_property
    def columns(self) -> Dict[str, np.ndarray]:
        sys_ = self.system
        n = len(self.t)
        per_unit = {q: np.zeros((n, len(sys_.unit_names))) for q in UNIT_COLUMNS}
        v_bus = np.zeros((n, sys_.n_bus))
        for k in range(n):
            _, _, out = sys_.evaluate(self.x[k], self.y[k], self.u[k], outputs=True)
            v_bus[k] = np.abs(out["v_bus"])
            if sys_.unit_names:
                per_unit["delta"][k] = np.degrees(out["delta"])
                per_unit["omega"][k] = out["omega"] / sys_.omega_s
                per_unit["v_terminal"][k] = out["v_terminal"]
                per_unit["p_elec"][k] = out["p_elec"]
                per_unit["p_accel"][k] = out["p_accel"]
                per_unit["efd"][k] = out["efd"]
                per_unit["vs_pss"][k] = out["vs"]
        cols = {}
        for j, name in enumerate(sys_.unit_names):
            for q in UNIT_COLUMNS:
                cols[f"{name}.{q}"] = per_unit[q][:, j]
        for i, bus_id in enumerate(b.id for b in sys_.case.buses):
            cols[f"bus{bus_id}.v_mag"] = v_bus[:, i]
        return cols

    def state(self, name: str) -> np.ndarray:
        return self.x[:, self.system.state_names.index(name)]


def speed_envelope(ts: TimeSeries, t0: float, t1: float) -> float:
    """Largest peak-to-peak rotor-speed swing (pu) over ``[t0, t1]``.

    Speeds are taken relative to synchronous speed when the system has an
    infinite bus, otherwise relative to the inertia-weighted centre of
    inertia so that the common frequency drift does not count as swing.
    """
    sys_ = ts.system
    if not sys_.unit_names:
        return 0.0
    mask = (ts.t >= t0 - 1e-12) & (ts.t <= t1 + 1e-12)
    omega = np.column_stack([ts.columns[f"{n}.omega"] for n in sys_.unit_names])[mask]
    if sys_.has_infinite_bus:
        ref = 1.0
    else:
        h = np.asarray(sys_.machine.h, dtype=float)
        ref = (omega @ h / h.sum())[:, None]
    return float(np.max(np.ptp(omega - ref, axis=0)))


def _fd_jacobian(system):
    """Forward-difference Jacobian of the stacked residual with respect to (x, y)."""
    nx = system.n_x

    def jac(u, x, y):
        z = np.concatenate([x, y])
        f0, g0 = system.evaluate(x, y, u)
        r0 = np.concatenate([f0, g0])
        out = np.empty((r0.size, z.size))
        for j in range(z.size):
            step = 1.5e-8 * max(1.0, abs(z[j]))
            zp = z.copy()
            zp[j] += step
            f, g = system.evaluate(zp[:nx], zp[nx:], u)
            out[:, j] = (np.concatenate([f, g]) - r0) / step
        return out

    return jac


def _hermite(theta, h, x0, f0, x1, f1):
    t2, t3 = theta * theta, theta ** 3
    return ((2 * t3 - 3 * t2 + 1) * x0 + (t3 - 2 * t2 + theta) * h * f0
            + (-2 * t3 + 3 * t2) * x1 + (t3 - t2) * h * f1)


def simulate(system, events: Sequence[Event] = (), opts: Optional[SimOptions] = None,
             x_start=None, y_start=None, u_start=None) -> TimeSeries:
    """Integrate from the equilibrium (or a given start) with TR-BDF2."""
    opts = opts or SimOptions(t_end=10.0)
    events = sorted(events, key=lambda e: e.time)
    for e in events:
        key = (e.target[0], QUANTITIES.get(e.target[1], e.target[1]))
        if key not in system.input_index:
            raise UnknownTarget(f"no input {e.target[1]!r} on unit {e.target[0]!r}")

    x = np.array(system.x0 if x_start is None else x_start, dtype=float)
    y = np.array(system.y0 if y_start is None else y_start, dtype=float)
    u = np.array(system.u0 if u_start is None else u_start, dtype=float)
    nx = system.n_x
    state = {"u": u}

    def rhs(t, xx, yy):
        return system.evaluate(xx, yy, state["u"])

    fd = _fd_jacobian(system)
    matrix = IterationMatrix(lambda t, xx, yy: fd(state["u"], xx, yy), nx)

    n_out = int(math.floor(opts.t_end / opts.output_dt + 1e-9))
    grid = [k * opts.output_dt for k in range(n_out + 1)]
    grid += [e.time for e in events if e.time <= opts.t_end]
    if grid[-1] < opts.t_end:
        grid.append(opts.t_end)
    grid = np.unique(np.round(np.array(grid), 12))
    u_first = u
    for e in events:
        if e.time <= 1e-12:
            u_first = apply_event(system, u_first, e)
    samples_t, samples_x, samples_y, samples_u = [0.0], [x.copy()], [y.copy()], [u_first.copy()]
    next_sample = 1

    t = 0.0
    h = min(opts.max_step, 1e-3)
    f0 = rhs(t, x, y)[0]
    matrix.refresh_jacobian(t, x, y)
    ev = 0
    steps = 0
    while t < opts.t_end - 1e-12:
        while ev < len(events) and events[ev].time <= t + 1e-12:
            u = apply_event(system, u, events[ev])
            state["u"] = u
            f0 = rhs(t, x, y)[0]
            ev += 1
        stop = min(events[ev].time if ev < len(events) else opts.t_end, opts.t_end)
        h_step = min(h, opts.max_step)
        if t + h_step >= stop - 1e-9 * max(1.0, stop) or stop - (t + h_step) < H_MIN:
            h_step = stop - t
            landing = True
        else:
            landing = False
        try:
            res = trbdf2_step(rhs, t, h_step, x, y, matrix, f0=f0,
                              rtol=opts.rel_tol, atol=opts.abs_tol)
        except NewtonFailure as exc:
            if not matrix.fresh:
                matrix.refresh_jacobian(t, x, y)
                continue
            h = h_step * 0.25
            if h < H_MIN:
                raise NewtonFailure(t, exc.residual) from None
            continue
        z_old = np.concatenate([x, y])
        z_new = np.concatenate([res.x, res.y])
        err = error_norm(res.error, z_old, z_new, opts.rel_tol, opts.abs_tol)
        factor = 2.0 if err == 0 else min(2.0, max(0.2, 0.9 * err ** (-1.0 / 3.0)))
        if err > 1.0:
            h = h_step * factor
            if h < H_MIN:
                raise StepUnderflow(t)
            continue

        t_new = stop if landing else t + h_step
        while next_sample < len(grid) and grid[next_sample] <= t_new + 1e-12:
            ts = grid[next_sample]
            theta = min(1.0, max(0.0, (ts - t) / h_step))
            if theta >= 1.0 - 1e-12:
                xs, ys = res.x.copy(), res.y.copy()
            else:
                xs = _hermite(theta, h_step, x, f0, res.x, res.f)
                ys = y + theta * (res.y - y)
            # inputs are right-continuous, so a sample at an event time shows the new value
            u_rec = u
            k = ev
            while k < len(events) and abs(events[k].time - ts) <= 1e-12:
                u_rec = apply_event(system, u_rec, events[k])
                k += 1
            samples_t.append(float(ts))
            samples_x.append(xs)
            samples_y.append(ys)
            samples_u.append(u_rec.copy())
            next_sample += 1

        t, x, y, f0 = t_new, res.x, res.y, res.f
        matrix.fresh = False
        steps += 1
        if not landing or factor < 1.0:
            h = h_step * factor
        h = min(max(h, H_MIN), opts.max_step)

    return TimeSeries(np.array(samples_t), np.array(samples_x), np.array(samples_y),
                      np.array(samples_u), system, steps)
