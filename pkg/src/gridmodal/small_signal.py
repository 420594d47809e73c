"""Linearisation, eigen-analysis and mode classification.

The state matrix comes from central finite differences of the DAE
residuals at the equilibrium, with the algebraic variables eliminated:
``A = fx - fy gy^-1 gx``.  Eigenvalues and left/right eigenvectors come
from LAPACK's balanced Hessenberg-QR driver.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from .exceptions import (DefectiveMode, NoConvergence, NotAtEquilibrium,
                         SingularAlgebraicJacobian, ZeroEigenvalue)

#: eigenvalues below this magnitude (1/s) are treated as structural zeros,
#: e.g. the common rotor-angle reference of a system without infinite bus
ZERO_MODE_TOL = 1e-6

#: relative residual required of every eigenpair
EIG_RESIDUAL_TOL = 1e-8


class ModeCategory(enum.Enum):
    INTER_PLANT = "InterPlant"
    LOCAL_PLANT = "LocalPlant"
    INTER_AREA = "InterArea"
    CONTROL_MODE = "ControlMode"
    TORSIONAL = "Torsional"
    NON_OSCILLATORY = "NonOscillatory"
    UNCLASSIFIED = "Unclassified"


# lower-inclusive, upper-exclusive bands; the torsional band also includes 46 Hz
_BANDS = (
    (0.3, 1.0, ModeCategory.INTER_AREA),
    (1.0, 2.0, ModeCategory.LOCAL_PLANT),
    (2.0, 3.0, ModeCategory.INTER_PLANT),
    (4.0, 10.0, ModeCategory.CONTROL_MODE),
)


def classify_mode(freq_hz: float) -> ModeCategory:
    if freq_hz < 0 or math.isnan(freq_hz):
        raise ValueError("frequency must be non-negative")
    if freq_hz == 0:
        return ModeCategory.NON_OSCILLATORY
    for lo, hi, cat in _BANDS:
        if lo <= freq_hz < hi:
            return cat
    if 10.0 <= freq_hz <= 46.0:
        return ModeCategory.TORSIONAL
    return ModeCategory.UNCLASSIFIED


def damping_ratio(lam: complex) -> float:
    if lam == 0:
        raise ZeroEigenvalue("damping ratio undefined for a zero eigenvalue")
    return -lam.real / abs(lam)


@dataclass(frozen=True)
class StateMatrix:
    a: np.ndarray
    state_labels: Tuple[str, ...]
    b: Optional[np.ndarray] = None
    input_labels: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.a.ndim != 2 or self.a.shape[0] != self.a.shape[1] or self.a.shape[0] < 1:
            raise ValueError("state matrix must be square and non-empty")
        if not np.all(np.isfinite(self.a)):
            raise ValueError("state matrix has non-finite entries")


@dataclass
class Mode:
    index: int
    lam: complex
    freq_hz: float
    damping_ratio: float
    category: ModeCategory
    dominant_states: List[Tuple[str, float]] = field(default_factory=list)
    structural_zero: bool = False


@dataclass
class ModalResult:
    modes: List[Mode]
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    participation: np.ndarray
    stable: bool
    least_damped: Optional[Mode]
    residuals: np.ndarray

    def modes_in_band(self, lo: float, hi: float) -> List[Mode]:
        return [md for md in self.modes if lo <= md.freq_hz < hi and md.lam.imag > 0]

    def least_damped_in_band(self, lo: float = 0.3, hi: float = 3.0) -> Optional[Mode]:
        band = self.modes_in_band(lo, hi)
        return min(band, key=lambda md: md.damping_ratio) if band else None


# -- linearisation --------------------------------------------------------------------

def jacobian_blocks(residual, x, y, u, h_rel=1e-6, with_inputs=False):
    """Central-difference Jacobian blocks of ``residual(x, y, u) -> (f, g)``."""
    nu = u.size
    f0, g0 = residual(x, y, u)
    nf, ng = f0.size, g0.size

    def columns(vec, which):
        jf = np.zeros((nf, vec.size))
        jg = np.zeros((ng, vec.size))
        for j in range(vec.size):
            step = h_rel * max(1.0, abs(vec[j]))
            args = [x, y, u]
            plus = vec.copy()
            plus[j] += step
            minus = vec.copy()
            minus[j] -= step
            args[which] = plus
            fp, gp = residual(*args)
            args[which] = minus
            fm, gm = residual(*args)
            jf[:, j] = (fp - fm) / (2 * step)
            jg[:, j] = (gp - gm) / (2 * step)
        return jf, jg

    fx, gx = columns(x, 0)
    fy, gy = columns(y, 1)
    if not with_inputs:
        return fx, fy, gx, gy
    fu, gu = columns(u, 2) if nu else (np.zeros((nf, 0)), np.zeros((ng, 0)))
    return fx, fy, gx, gy, fu, gu


def reduce_blocks(fx, fy, gx, gy, fu=None, gu=None):
    """Eliminate the algebraic variables: returns A (and B when inputs given)."""
    if gy.size == 0:
        return fx if fu is None else (fx, fu)
    try:
        lu = scipy.linalg.lu_factor(gy, check_finite=True)
    except (ValueError, np.linalg.LinAlgError):
        raise SingularAlgebraicJacobian("algebraic Jacobian could not be factorised") from None
    if np.min(np.abs(np.diag(lu[0]))) <= 1e-13 * max(1.0, np.max(np.abs(gy))):
        raise SingularAlgebraicJacobian("algebraic Jacobian g_y is rank deficient")
    a = fx - fy @ scipy.linalg.lu_solve(lu, gx)
    if fu is None:
        return a
    return a, fu - fy @ scipy.linalg.lu_solve(lu, gu)


def linearize(system, h_rel: float = 1e-6, with_inputs: bool = False) -> StateMatrix:
    """Reduced state matrix of an assembled system at its equilibrium."""
    res = system.residual_norm()
    if res >= 1e-6:
        raise NotAtEquilibrium(f"residual {res:.3e} at the linearisation point")
    blocks = jacobian_blocks(system.evaluate, system.x0, system.y0, system.u0,
                             h_rel=h_rel, with_inputs=with_inputs)
    if with_inputs:
        a, b = reduce_blocks(*blocks)
        return StateMatrix(a, tuple(system.state_names), b, tuple(system.input_names))
    return StateMatrix(reduce_blocks(*blocks), tuple(system.state_names))


# -- eigen-analysis -----------------------------------------------------------------------

def participation_factors(a, right_vecs, left_vecs) -> np.ndarray:
    """Participation matrix ``P[k, i]`` of state k in mode i; columns sum to one.

    ``left_vecs[:, i]`` is the left eigenvector as returned by LAPACK, i.e.
    ``left_vecs[:, i].conj() @ a == lam_i * left_vecs[:, i].conj()``.
    """
    prod = right_vecs * np.conj(left_vecs)
    mag = np.abs(prod)
    sums = mag.sum(axis=0)
    scale = np.linalg.norm(right_vecs, axis=0) * np.linalg.norm(left_vecs, axis=0)
    overlap = np.abs(prod.sum(axis=0))
    for i in range(mag.shape[1]):
        if overlap[i] <= 1e-12 * scale[i] or sums[i] == 0:
            raise DefectiveMode(i)
    return mag / sums


def eigen_analysis(sm: StateMatrix, n_dominant: int = 2) -> ModalResult:
    a = sm.a
    try:
        lam, vl, vr = scipy.linalg.eig(a, left=True, right=True)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(getattr(exc, "index", -1)) from None
    if not np.all(np.isfinite(lam)):
        raise NoConvergence(int(np.argmin(np.isfinite(lam))))

    norm_a = np.linalg.norm(a, 2) or 1.0
    vr = vr / np.linalg.norm(vr, axis=0)
    residuals = np.linalg.norm(a @ vr - vr * lam, axis=0) / norm_a
    part = participation_factors(a, vr, vl)

    modes: List[Mode] = []
    labels = sm.state_labels
    for i in np.argsort(-lam.real, kind="stable"):
        li = complex(lam[i])
        if li.imag < 0:
            continue
        zero = abs(li) < ZERO_MODE_TOL
        if zero:
            li = complex(li.real, 0.0)
        freq = abs(li.imag) / (2 * math.pi)
        if zero or li.imag == 0:
            zeta = 0.0 if zero else -math.copysign(1.0, li.real)
            category = ModeCategory.NON_OSCILLATORY
            freq = 0.0
        else:
            zeta = damping_ratio(li)
            category = classify_mode(freq)
        order = np.argsort(-part[:, i], kind="stable")[:n_dominant]
        dominant = [(labels[k], float(part[k, i])) for k in order]
        modes.append(Mode(int(i), li, freq, zeta, category, dominant, zero))

    live = [md for md in modes if not md.structural_zero]
    stable = all(md.lam.real < 0 for md in live)
    oscillatory = [md for md in live if md.lam.imag > 0]
    pool = oscillatory or live
    least = min(pool, key=lambda md: md.damping_ratio) if pool else None
    return ModalResult(modes, lam, vr, vl, part, stable, least, residuals)


def analyse(system, h_rel: float = 1e-6) -> ModalResult:
    return eigen_analysis(linearize(system, h_rel))
