"""Integrators for linear first-order systems ``y' = M(x) y``.

Two routes are provided.  :func:`integrate_linear_ode` is an adaptive
Dormand-Prince 5(4) scheme working on arbitrary coefficient closures.
:func:`propagate` and :func:`propagate_subspace` run fixed-step RK4 on a
coefficient tabulated at nodes and midpoints through the compiled kernels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import kernels

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B5 - _B4


class StepUnderflowError(RuntimeError):
    """The adaptive step collapsed below machine resolution.

    Attributes
    ----------
    x_last : float
        Last abscissa where the solution was accepted.
    """

    def __init__(self, x_last: float, h: float):
        self.x_last = x_last
        super().__init__(f"step size underflow (h={h:.3e}) after last good x={x_last:.12g}")


@dataclass(frozen=True)
class ODESolution:
    """Samples of an integrated solution.

    ``y`` has shape ``(len(x),) + y0.shape``.
    """

    x: np.ndarray
    y: np.ndarray
    n_steps: int

    @property
    def final(self) -> np.ndarray:
        return self.y[-1]


def integrate_linear_ode(
    coeff: Callable[[float], np.ndarray],
    y0,
    x0: float,
    x1: float,
    tol: float = 1e-10,
    t_eval: Sequence[float] | None = None,
    h0: float | None = None,
    max_steps: int = 1_000_000,
) -> ODESolution:
    """Adaptive Dormand-Prince integration of ``y' = M(x) y``.

    Parameters
    ----------
    coeff : callable
        ``x -> M(x)``, a complex ``(n, n)`` matrix.
    y0 : array_like
        Initial vector ``(n,)`` or block of columns ``(n, k)``.
    x0, x1 : float
        Start and end; ``x1 < x0`` integrates backward.
    tol : float
        Bound on the local error per step, scaled by ``max(1, |y|)``.
        Must lie in ``(0, 1e-3]``.
    t_eval : sequence of float, optional
        Points where the solution is reported, ordered along the direction
        of integration.  Defaults to the two end points.

    Raises
    ------
    StepUnderflowError
        When the step shrinks to roundoff level, carrying the last good x.
    """
    if not 0.0 < tol <= 1e-3:
        raise ValueError(f"tol must lie in (0, 1e-3], got {tol}")
    y = np.array(y0, dtype=np.complex128, copy=True)
    x0, x1 = float(x0), float(x1)
    direction = 1.0 if x1 >= x0 else -1.0
    if t_eval is None:
        targets = [x0, x1]
    else:
        targets = [float(t) for t in t_eval]
        if any(direction * (b - a) < 0 for a, b in zip(targets, targets[1:])):
            raise ValueError("t_eval must be monotone in the direction of integration")
        if any(direction * (t - x0) < 0 or direction * (x1 - t) < 0 for t in targets):
            raise ValueError("t_eval points must lie between x0 and x1")

    out_x, out_y = [], []
    ti = 0
    while ti < len(targets) and targets[ti] == x0:
        out_x.append(x0)
        out_y.append(y.copy())
        ti += 1

    x = x0
    span = abs(x1 - x0)
    if span == 0.0:
        return ODESolution(np.array(out_x), np.array(out_y), 0)
    h = abs(h0) if h0 else min(span, 0.01 * max(span, 1.0))
    k = [None] * 7
    k[0] = coeff(x) @ y
    steps = 0
    while direction * (x1 - x) > 0:
        if steps >= max_steps:
            raise StepUnderflowError(x, h)
        # land exactly on the next report point
        nxt = targets[ti] if ti < len(targets) else x1
        h = min(h, abs(nxt - x))
        hs = direction * h
        for s in range(1, 7):
            ys = y + hs * sum(a * k[j] for j, a in enumerate(_A[s]))
            k[s] = coeff(x + _C[s] * hs) @ ys
        y5 = y + hs * sum(b * kk for b, kk in zip(_B5, k) if b != 0.0)
        err_vec = hs * sum(e * kk for e, kk in zip(_E, k) if e != 0.0)
        scale = tol * max(1.0, float(np.abs(y).max()), float(np.abs(y5).max()))
        err = float(np.abs(err_vec).max()) / scale
        if err <= 1.0:
            x_new = x + hs
            if abs(x_new - nxt) <= 1e-14 * max(1.0, abs(nxt)):
                x_new = nxt
            x, y = x_new, y5
            k[0] = k[6]  # first-same-as-last
            steps += 1
            while ti < len(targets) and direction * (targets[ti] - x) <= 0:
                out_x.append(targets[ti])
                out_y.append(y.copy())
                ti += 1
            fac = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** (-0.2))
            h = h * max(fac, 0.2)
        else:
            if not np.isfinite(err):
                fac = 0.1
            else:
                fac = max(0.1, 0.9 * err ** (-0.25))
            h = h * fac
        if h < 1e-14 * max(1.0, abs(x)):
            raise StepUnderflowError(x, h)
    return ODESolution(np.array(out_x), np.array(out_y), steps)


def tabulate(coeff: Callable[[np.ndarray], np.ndarray], x0: float, x1: float, n_steps: int) -> np.ndarray:
    """Sample a vectorized coefficient at nodes and midpoints of ``n_steps`` steps.

    Returns an array of shape ``(2 * n_steps + 1, n, n)`` ordered from ``x0``
    to ``x1``.
    """
    xs = np.linspace(x0, x1, 2 * n_steps + 1)
    return np.ascontiguousarray(coeff(xs), dtype=np.complex128)


def propagate(coef_table: np.ndarray, y0, h: float, backend: str | None = None) -> np.ndarray:
    """Fixed-step RK4 trajectory over a tabulated coefficient.

    Returns all node states with shape ``(n_steps + 1, n, k)``.
    """
    impl = _backend(backend)
    y = np.ascontiguousarray(np.atleast_2d(np.asarray(y0, dtype=np.complex128).T).T)
    return impl.rk4_trajectory(np.ascontiguousarray(coef_table, dtype=np.complex128), y, float(h))


def propagate_subspace(coef_table: np.ndarray, y0, h: float, backend: str | None = None):
    """Propagate the column span of ``y0`` with re-orthonormalization.

    Returns ``(basis, log_growth)`` where ``basis`` has orthonormal columns.
    """
    impl = _backend(backend)
    y = np.ascontiguousarray(np.asarray(y0, dtype=np.complex128))
    return impl.rk4_subspace(np.ascontiguousarray(coef_table, dtype=np.complex128), y, float(h))


def _backend(name: str | None):
    if name is None:
        return kernels
    table = kernels.available_backends()
    if name not in table:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(table)}")
    return table[name]
