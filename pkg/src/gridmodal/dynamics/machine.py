"""Six-state sub-transient synchronous machine and its stator interface.

Currents ``id``, ``iq`` passed in and out of this module follow the
generator convention (positive out of the machine).  The rotor equations
are written with the armature-reaction current ``Id = -id``, the form in
which the d-axis flux equations are usually stated; the q-axis is its
mirror image.  All six equations use one shared set of flux-interpolation
coefficients from :func:`flux_coefficients`, which is also what the stator
uses to build the sub-transient voltages.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..exceptions import SingularStator
from .params import MachineParams


@dataclass
class MachineState:
    delta: float
    omega: float
    eq_p: float
    ed_p: float
    psi_1d: float
    psi_2q: float

    def as_tuple(self):
        return (self.delta, self.omega, self.eq_p, self.ed_p, self.psi_1d, self.psi_2q)


class FluxCoefficients(NamedTuple):
    kd1: object  # (X''d - Xls) / (X'd - Xls)
    kd2: object  # (X'd - X''d) / (X'd - Xls)
    kq1: object  # (X''q - Xls) / (X'q - Xls)
    kq2: object  # (X'q - X''q) / (X'q - Xls)


def flux_coefficients(p: MachineParams) -> FluxCoefficients:
    dd = p.xd_p - p.xls
    dq = p.xq_p - p.xls
    return FluxCoefficients((p.xd_pp - p.xls) / dd, (p.xd_p - p.xd_pp) / dd,
                            (p.xq_pp - p.xls) / dq, (p.xq_p - p.xq_pp) / dq)


def subtransient_voltages(p: MachineParams, s: MachineState):
    """Return (e''_d, e''_q) built from the rotor flux states."""
    k = flux_coefficients(p)
    ed_pp = k.kq1 * s.ed_p + k.kq2 * s.psi_2q
    eq_pp = k.kd1 * s.eq_p + k.kd2 * s.psi_1d
    return ed_pp, eq_pp


def electrical_torque(p: MachineParams, s: MachineState, id, iq):
    """Air-gap torque in per-unit (equal to air-gap power at synchronous speed)."""
    k = flux_coefficients(p)
    Id, Iq = -id, iq
    return (k.kd1 * s.eq_p * Iq + k.kd2 * s.psi_1d * Iq
            - k.kq1 * s.ed_p * Id - k.kq2 * s.psi_2q * Id
            - (p.xq_pp - p.xd_pp) * Iq * Id)


def machine_derivatives(p: MachineParams, s: MachineState, id, iq, efd, tm, omega_s):
    """Time derivatives of (delta, omega, E'q, E'd, psi_1d, psi_2q).

    ``omega`` is in rad/s; ``tm`` is per-unit torque; damping ``d`` acts on
    the per-unit speed deviation.
    """
    k = flux_coefficients(p)
    Id, Iq = -id, iq
    slip = s.omega - omega_s

    d_delta = slip
    d_omega = omega_s / (2.0 * p.h) * (
        tm - p.d * slip / omega_s
        - k.kd1 * s.eq_p * Iq
        - k.kd2 * s.psi_1d * Iq
        + k.kq1 * s.ed_p * Id
        + k.kq2 * s.psi_2q * Id
        + (p.xq_pp - p.xd_pp) * Iq * Id)

    damper_d = s.psi_1d - (p.xd_p - p.xls) * Id - s.eq_p
    d_eq = (-s.eq_p
            - (p.xd - p.xd_p) * (-Id - (p.xd_p - p.xd_pp) / (p.xd_p - p.xls) ** 2 * damper_d)
            + efd) / p.tdo_p

    damper_q = s.psi_2q - (p.xq_p - p.xls) * Iq - s.ed_p
    d_ed = (-s.ed_p
            - (p.xq - p.xq_p) * (-Iq - (p.xq_p - p.xq_pp) / (p.xq_p - p.xls) ** 2 * damper_q)
            ) / p.tqo_p

    d_psi1d = (-s.psi_1d + s.eq_p + (p.xd_p - p.xls) * Id) / p.tdo_pp
    d_psi2q = (-s.psi_2q + s.ed_p + (p.xq_p - p.xls) * Iq) / p.tqo_pp

    return d_delta, d_omega, d_eq, d_ed, d_psi1d, d_psi2q


def stator_algebraic(p: MachineParams, s: MachineState, vd, vq):
    """Solve the stator equations for (id, iq) given terminal dq voltages.

    ``vd = e''d - rs id + x''q iq`` and ``vq = e''q - rs iq - x''d id``.
    """
    det = p.rs * p.rs + p.xd_pp * p.xq_pp
    if np.any(det == 0):
        raise SingularStator("rs^2 + x''d x''q vanishes")
    ed_pp, eq_pp = subtransient_voltages(p, s)
    a = ed_pp - vd
    b = eq_pp - vq
    id = (p.rs * a + p.xq_pp * b) / det
    iq = (p.rs * b - p.xd_pp * a) / det
    return id, iq


def network_to_dq(v, delta):
    """Rotate a network-frame phasor into the machine (d, q) frame."""
    vdq = 1j * v * np.exp(-1j * delta)
    return vdq.real, vdq.imag


def dq_to_network(d, q, delta):
    return (d + 1j * q) * (-1j) * np.exp(1j * delta)
