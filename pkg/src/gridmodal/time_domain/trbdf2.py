"""One-step TR-BDF2 for semi-explicit index-1 DAEs ``x' = f(t, x, y)``, ``0 = g(t, x, y)``.

A trapezoidal stage to ``t + gamma*h`` is followed by a BDF2 stage to
``t + h`` with ``gamma = 2 - sqrt(2)``.  Both stages share the iteration
matrix ``[[I - d h fx, -d h fy], [gx, gy]]`` with ``d = gamma / 2``.  The
local error estimate is the difference to the embedded third-order
formula, filtered through the iteration matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from ..exceptions import NewtonFailure

GAMMA = 2.0 - math.sqrt(2.0)
D = GAMMA / 2.0
W = math.sqrt(2.0) / 4.0
#: BDF2 stage: x1 = A1 * x_gamma - B1 * x_n + D h f1
A1 = 1.0 / (GAMMA * (2.0 - GAMMA))
B1 = (1.0 - GAMMA) ** 2 / (GAMMA * (2.0 - GAMMA))
#: embedded error: h/3 * ((1 - 4W) f_n + f_gamma - 2 D f_{n+1})
E0, E1, E2 = (1.0 - 4.0 * W) / 3.0, 1.0 / 3.0, -2.0 * D / 3.0


@dataclass
class StepResult:
    x: np.ndarray
    y: np.ndarray
    f: np.ndarray
    error: np.ndarray
    newton_iterations: int


class IterationMatrix:
    """LU factors of the Newton matrix for a given ``d*h``, rebuilt on demand."""

    def __init__(self, jac_fn: Callable, n_x: int):
        self.jac_fn = jac_fn
        self.n_x = n_x
        self.jac = None
        self.dh = None
        self.lu = None
        self.fresh = False

    def refresh_jacobian(self, t, x, y):
        self.jac = self.jac_fn(t, x, y)
        self.lu = None
        self.fresh = True

    def factor(self, dh):
        if self.jac is None:
            raise RuntimeError("Jacobian not initialised")
        if self.lu is not None and dh == self.dh:
            return self.lu
        nx = self.n_x
        m = np.array(self.jac, dtype=float)
        m[:nx, :] *= -dh
        m[:nx, :nx] += np.eye(nx)
        self.lu = scipy.linalg.lu_factor(m, check_finite=False)
        self.dh = dh
        return self.lu

    def solve(self, rhs):
        return scipy.linalg.lu_solve(self.lu, rhs, check_finite=False)


def _newton(resid_fn, z0, matrix: IterationMatrix, scale, tol, max_iter):
    """Simplified Newton with a frozen iteration matrix.

    Returns (z, iterations) or raises ``_NewtonDiverged``.
    """
    z = z0.copy()
    prev = None
    for it in range(1, max_iter + 1):
        r = resid_fn(z)
        if not np.all(np.isfinite(r)):
            raise _NewtonDiverged(float("inf"))
        dz = matrix.solve(-r)
        z += dz
        norm = float(np.sqrt(np.mean((dz / scale) ** 2))) if dz.size else 0.0
        if norm <= tol:
            return z, it
        if prev is not None and norm > 0.9 * prev and it > 2:
            raise _NewtonDiverged(norm)
        prev = norm
    raise _NewtonDiverged(prev if prev is not None else float("inf"))


class _NewtonDiverged(Exception):
    def __init__(self, norm):
        self.norm = norm


def trbdf2_step(rhs: Callable, t: float, h: float, x: np.ndarray, y: np.ndarray,
                matrix: IterationMatrix, f0: Optional[np.ndarray] = None,
                rtol: float = 1e-6, atol: float = 1e-8,
                newton_tol: float = 1e-2, max_newton: int = 8) -> StepResult:
    """Advance ``(x, y)`` from ``t`` to ``t + h``.

    ``rhs(t, x, y)`` returns ``(f, g)``.  ``matrix`` supplies the Jacobian
    and is refactored for this ``h`` when needed.  Raises
    :class:`NewtonFailure` when either stage fails to converge; the caller
    decides whether to refresh the Jacobian or shrink the step.
    """
    nx = x.size
    if f0 is None:
        f0 = rhs(t, x, y)[0]
    dh = D * h
    matrix.factor(dh)
    z_n = np.concatenate([x, y])
    scale = atol + rtol * np.abs(z_n)

    # trapezoidal stage
    tg = t + GAMMA * h
    base_g = x + dh * f0

    def resid_g(z):
        f, g = rhs(tg, z[:nx], z[nx:])
        return np.concatenate([z[:nx] - base_g - dh * f, g])

    pred = np.concatenate([x + GAMMA * h * f0, y])
    try:
        zg, it1 = _newton(resid_g, pred, matrix, scale, newton_tol, max_newton)
    except _NewtonDiverged as exc:
        raise NewtonFailure(tg, exc.norm) from None
    # at convergence the stage equation gives f without another evaluation
    fg = (zg[:nx] - base_g) / dh

    # BDF2 stage
    t1 = t + h
    base_1 = A1 * zg[:nx] - B1 * x

    def resid_1(z):
        f, g = rhs(t1, z[:nx], z[nx:])
        return np.concatenate([z[:nx] - base_1 - dh * f, g])

    pred = z_n + (zg - z_n) / GAMMA
    try:
        z1, it2 = _newton(resid_1, pred, matrix, scale, newton_tol, max_newton)
    except _NewtonDiverged as exc:
        raise NewtonFailure(t1, exc.norm) from None
    f1 = (z1[:nx] - base_1) / dh

    est = h * (E0 * f0 + E1 * fg + E2 * f1)
    err = matrix.solve(np.concatenate([est, np.zeros(z_n.size - nx)]))
    return StepResult(z1[:nx], z1[nx:], f1, err, it1 + it2)


def error_norm(err, z_old, z_new, rtol, atol) -> float:
    scale = atol + rtol * np.maximum(np.abs(z_old), np.abs(z_new))
    return float(np.sqrt(np.mean((err / scale) ** 2))) if err.size else 0.0
