"""Parameter blocks for machines and their controllers.

All values are per-unit on the machine MVA base unless noted otherwise.
The blocks are frozen dataclasses; :func:`stack` turns a list of blocks
into one block whose fields are numpy arrays so the model equations can be
evaluated for every unit at once.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from typing import Optional, Union

import numpy as np


@dataclass(frozen=True)
class MachineParams:
    h: float = 3.5
    d: float = 0.0
    xd: float = 1.2
    xd_p: float = 0.3
    xd_pp: float = 0.22
    xq: float = 0.9
    xq_p: float = 0.5
    xq_pp: float = 0.25
    xls: float = 0.15
    rs: float = 0.003
    tdo_p: float = 6.0
    tdo_pp: float = 0.04
    tqo_p: float = 0.8
    tqo_pp: float = 0.06

    def validate(self):
        if not self.h > 0:
            raise ValueError("machine: h must be positive")
        if self.d < 0:
            raise ValueError("machine: d must be non-negative")
        if not (self.xd > self.xd_p > self.xd_pp > self.xls > 0):
            raise ValueError("machine: need xd > xd_p > xd_pp > xls > 0")
        if not (self.xq > self.xq_p > self.xq_pp > self.xls):
            raise ValueError("machine: need xq > xq_p > xq_pp > xls")
        if self.rs < 0:
            raise ValueError("machine: rs must be non-negative")
        for name in ("tdo_p", "tdo_pp", "tqo_p", "tqo_pp"):
            if not getattr(self, name) > 0:
                raise ValueError(f"machine: {name} must be positive")
        if not self.tdo_p > self.tdo_pp:
            raise ValueError("machine: need tdo_p > tdo_pp")
        if not self.tqo_p > self.tqo_pp:
            raise ValueError("machine: need tqo_p > tqo_pp")

    def to_system_base(self, mva: float, s_base: float) -> "MachineParams":
        """Rescale impedances, inertia and damping from machine to system base."""
        z = s_base / mva
        m = mva / s_base
        return dataclasses.replace(
            self, h=self.h * m, d=self.d * m,
            xd=self.xd * z, xd_p=self.xd_p * z, xd_pp=self.xd_pp * z,
            xq=self.xq * z, xq_p=self.xq_p * z, xq_pp=self.xq_pp * z,
            xls=self.xls * z, rs=self.rs * z)


@dataclass(frozen=True)
class ExciterST1A:
    """Static exciter: measurement lag, optional lead-lag, gain, output clamp.

    ``tb = tc = 0`` removes the lead-lag stage.
    """

    tr: float = 0.02
    ka: float = 200.0
    tb: float = 0.0
    tc: float = 0.0
    efd_min: float = -6.0
    efd_max: float = 6.0

    def validate(self):
        if not self.tr > 0:
            raise ValueError("exciter: tr must be positive")
        if not self.ka > 0:
            raise ValueError("exciter: ka must be positive")
        if self.tb < 0 or self.tc < 0:
            raise ValueError("exciter: tb and tc must be non-negative")
        if self.tb == 0 and self.tc != 0:
            raise ValueError("exciter: tc > 0 requires tb > 0")
        if not self.efd_min < self.efd_max:
            raise ValueError("exciter: need efd_min < efd_max")

    @property
    def has_lead_lag(self) -> bool:
        return self.tb > 0


@dataclass(frozen=True)
class HydroGovernor:
    kp: float = 1.0
    ki: float = 0.3
    kd: float = 0.0
    td: float = 0.05  # derivative filter time constant
    ta_servo: float = 0.2
    g_min: float = 0.01
    g_max: float = 1.0
    rate_limit: float = 0.2
    tw: float = 1.5
    at: float = 1.1
    q_nl: float = 0.08
    r_perm: float = 0.05

    def validate(self):
        if not self.tw > 0:
            raise ValueError("hydro governor: tw must be positive")
        if not self.ta_servo > 0:
            raise ValueError("hydro governor: ta_servo must be positive")
        if not self.td > 0:
            raise ValueError("hydro governor: td must be positive")
        if not self.g_min < self.g_max:
            raise ValueError("hydro governor: need g_min < g_max")
        if not self.g_min > 0:
            raise ValueError("hydro governor: g_min must be positive")
        if not self.rate_limit > 0:
            raise ValueError("hydro governor: rate_limit must be positive")
        if not self.at > 0:
            raise ValueError("hydro governor: at must be positive")
        if self.r_perm < 0:
            raise ValueError("hydro governor: r_perm must be non-negative")


@dataclass(frozen=True)
class GasGovernor:
    r_droop: float = 0.05
    t_valve: float = 0.05
    t_comb: float = 0.2
    t_turb: float = 0.5
    f_min: float = 0.0
    f_max: float = 1.2
    k_turb: float = 1.0

    def validate(self):
        for name in ("r_droop", "t_valve", "t_comb", "t_turb", "k_turb"):
            if not getattr(self, name) > 0:
                raise ValueError(f"gas governor: {name} must be positive")
        if not self.f_min < self.f_max:
            raise ValueError("gas governor: need f_min < f_max")


@dataclass(frozen=True)
class NoGovernor:
    """Constant mechanical torque equal to the power reference."""

    def validate(self):
        pass


@dataclass(frozen=True)
class NoExciter:
    """Constant field voltage equal to the voltage reference input."""

    def validate(self):
        pass

    has_lead_lag = False


@dataclass(frozen=True)
class PssMB:
    """Three-band stabilizer (low, intermediate, high) driven by speed deviation."""

    f_l: float = 0.2
    f_i: float = 1.25
    f_h: float = 12.0
    k_l: float = 10.0
    k_i: float = 20.0
    k_h: float = 20.0
    vs_min: float = -0.15
    vs_max: float = 0.15

    def validate(self):
        if not (0 < self.f_l < self.f_i < self.f_h):
            raise ValueError("pss: need 0 < f_l < f_i < f_h")
        # a zero-gain band leaves its equal-lag cascades uncoupled, i.e. a
        # defective state matrix; drop the pss block instead
        if min(self.k_l, self.k_i, self.k_h) <= 0:
            raise ValueError("pss: band gains must be positive")
        if not self.vs_min < self.vs_max:
            raise ValueError("pss: need vs_min < vs_max")

    @property
    def bands(self):
        return ((self.f_l, self.k_l), (self.f_i, self.k_i), (self.f_h, self.k_h))


GovernorParams = Union[HydroGovernor, GasGovernor, NoGovernor]
ExciterParams = Union[ExciterST1A, NoExciter]


def stack(blocks):
    """Combine same-typed parameter blocks into one block of arrays."""
    blocks = list(blocks)
    cls = type(blocks[0])
    values = {f.name: np.array([getattr(b, f.name) for b in blocks], dtype=float)
              for f in fields(cls)}
    return cls(**values)


def from_mapping(cls, mapping: dict, line: Optional[int] = None):
    """Build a parameter block from ``key=value`` strings, rejecting unknown keys."""
    from ..exceptions import MalformedCase

    known = {f.name for f in fields(cls)}
    kwargs = {}
    for key, raw in mapping.items():
        if key not in known:
            raise MalformedCase(line, f"unknown {cls.__name__} key {key!r}")
        try:
            kwargs[key] = float(raw)
        except ValueError:
            raise MalformedCase(line, f"{key}={raw!r} is not a number") from None
    block = cls(**kwargs)
    try:
        block.validate()
    except ValueError as exc:
        raise MalformedCase(line, str(exc)) from None
    return block
