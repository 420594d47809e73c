"""Exciter, turbine-governor and stabilizer models.

Every function works elementwise, so the same code evaluates one unit with
float parameters or many units with stacked array parameters.  Hard limits
are realised by :func:`smooth_clamp`, which is the identity away from the
limits and C1 across a narrow blending band.
"""

from __future__ import annotations

import math

import numpy as np

from .params import ExciterST1A, GasGovernor, HydroGovernor, PssMB

#: half-width of the C1 blending band around each limit, per-unit
LIMIT_BLEND = 1e-4

#: ratio between the two detuned paths of each stabilizer band
PSS_DETUNE = 1.5


def smooth_clamp(x, lo, hi, w=LIMIT_BLEND):
    """Clamp to [lo, hi] with quadratic C1 blending over [lim - w, lim + w]."""
    x = np.asarray(x, dtype=float)
    lo_in, hi_in = np.add(lo, w), np.subtract(hi, w)
    if np.all((x >= lo_in) & (x <= hi_in)):
        # common case: every element in the linear region
        return x if x.ndim else float(x)
    y = np.minimum(np.maximum(x, lo), hi)
    upper = (x > hi - w) & (x < hi + w)
    lower = (x < lo + w) & (x > lo - w)
    y = np.where(upper, x - (x - (hi - w)) ** 2 / (4 * w), y)
    y = np.where(lower, x + (x - (lo + w)) ** 2 / (4 * w), y)
    return y if y.ndim else float(y)


def inside_limits(value, lo, hi, w=LIMIT_BLEND) -> bool:
    """True when ``value`` sits in the linear part of :func:`smooth_clamp`."""
    return bool(np.all((value >= lo + w) & (value <= hi - w)))


# -- ST1A exciter -----------------------------------------------------------------

def exciter_derivatives(e: ExciterST1A, x_exc, v_terminal, v_ref, v_pss):
    """ST1A exciter.  ``x_exc = (vm, x_ll)``; ``x_ll`` is ignored when tb = 0.

    Returns ((d_vm, d_ll), efd).
    """
    vm, x_ll = x_exc
    tb = np.asarray(e.tb, dtype=float)
    d_vm = (v_terminal - vm) / e.tr
    err = v_ref - vm + v_pss
    has_ll = tb > 0
    tb_safe = np.where(has_ll, tb, 1.0)
    d_ll = np.where(has_ll, (err - x_ll) / tb_safe, 0.0)
    out = np.where(has_ll, x_ll + e.tc / tb_safe * (err - x_ll), err)
    efd = smooth_clamp(e.ka * out, e.efd_min, e.efd_max)
    if np.ndim(d_ll) == 0:
        d_ll = float(d_ll)
    return (d_vm, d_ll), efd


def exciter_equilibrium(e: ExciterST1A, v_terminal, efd):
    """States and voltage reference that hold ``efd`` at terminal voltage ``v_terminal``."""
    err = efd / e.ka
    return (v_terminal, err), v_terminal + err


# -- hydro turbine and PID governor ------------------------------------------------

def hydro_derivatives(g: HydroGovernor, x_gov, speed_dev, p_ref):
    """PID governor, rate/position-limited gate servo and nonlinear penstock.

    ``x_gov = (x_int, x_der, gate, q)``; ``p_ref`` is the gate reference.
    Returns ((d_int, d_der, d_gate, d_q), tm) with tm on the machine base.
    """
    x_int, x_der, gate, q = x_gov
    err = g.r_perm * (p_ref - gate) - speed_dev
    d_int = g.ki * err
    d_der = (err - x_der) / g.td
    command = g.kp * err + x_int + g.kd * d_der
    command = smooth_clamp(command, g.g_min, g.g_max)
    d_gate = smooth_clamp((command - gate) / g.ta_servo, -g.rate_limit, g.rate_limit)
    head = (q / gate) ** 2
    d_q = (1.0 - head) / g.tw
    tm = g.at * head * (q - g.q_nl)
    return (d_int, d_der, d_gate, d_q), tm


def hydro_equilibrium(g: HydroGovernor, tm):
    """States and gate reference delivering torque ``tm`` at rated speed."""
    gate = tm / g.at + g.q_nl
    return (gate, 0.0, gate, gate), gate


# -- gas turbine -------------------------------------------------------------------

def gas_derivatives(g: GasGovernor, x_gov, speed_dev, p_ref):
    """Droop governor feeding valve, combustor and turbine lags.

    ``x_gov = (valve, combustor, turbine)``.  Returns (derivatives, tm).
    """
    valve, comb, turb = x_gov
    fuel = smooth_clamp(p_ref - speed_dev / g.r_droop, g.f_min, g.f_max)
    d_valve = (fuel - valve) / g.t_valve
    d_comb = (valve - comb) / g.t_comb
    d_turb = (comb - turb) / g.t_turb
    return (d_valve, d_comb, d_turb), g.k_turb * turb


def gas_equilibrium(g: GasGovernor, tm):
    ref = tm / g.k_turb
    return (ref, ref, ref), ref


# -- multi-band stabilizer -------------------------------------------------------------

def _band_constants(f_center):
    """Time constants of the two detuned paths for a band centred on ``f_center``."""
    t = 1.0 / (2.0 * np.pi * np.asarray(f_center, dtype=float))
    return t / PSS_DETUNE, t * PSS_DETUNE


def _band_normalisation():
    r = PSS_DETUNE
    fast = 1.0 / (1.0 + 1j / r) ** 2
    slow = 1.0 / (1.0 + 1j * r) ** 2
    return 1.0 / abs(fast - slow)


#: scales each band so its gain at the centre frequency is exactly k
PSS_BAND_NORM = _band_normalisation()


def pss_band_response(f_center, gain, freq_hz):
    """Complex frequency response of one band (linear, unclamped)."""
    t_fast, t_slow = _band_constants(f_center)
    s = 2j * math.pi * np.asarray(freq_hz, dtype=float)
    return gain * PSS_BAND_NORM * (1.0 / (1 + s * t_fast) ** 2 - 1.0 / (1 + s * t_slow) ** 2)


def pss_transfer(p: PssMB, s):
    """Linear transfer function of the whole stabilizer at complex ``s``."""
    total = 0.0
    for f, k in p.bands:
        t_fast, t_slow = _band_constants(f)
        total = total + k * PSS_BAND_NORM * (1 / (1 + s * t_fast) ** 2 - 1 / (1 + s * t_slow) ** 2)
    return total


def pss_derivatives(p: PssMB, x_pss, speed_dev):
    """Three band-pass differencers on the per-unit speed deviation.

    ``x_pss`` holds 12 states: for each band (L, I, H) the two stages of the
    fast path followed by the two stages of the slow path.  Returns
    (derivatives, vs).
    """
    derivs = []
    total = 0.0
    for band, (f, k) in enumerate(p.bands):
        s1, s2, s3, s4 = x_pss[4 * band:4 * band + 4]
        t_fast, t_slow = _band_constants(f)
        derivs += [(speed_dev - s1) / t_fast, (s1 - s2) / t_fast,
                   (speed_dev - s3) / t_slow, (s3 - s4) / t_slow]
        total = total + k * PSS_BAND_NORM * (s2 - s4)
    vs = smooth_clamp(total, p.vs_min, p.vs_max)
    return tuple(derivs), vs


PSS_STATES = tuple(f"{band}_{path}{stage}" for band in ("L", "I", "H")
                   for path in ("fast", "slow") for stage in (1, 2))
