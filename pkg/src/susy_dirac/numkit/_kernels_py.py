"""Pure-Python propagation kernels; same API as the compiled module."""

from __future__ import annotations

import numpy as np


def _step(coef: np.ndarray, j: int, h: float, y: np.ndarray) -> np.ndarray:
    k1 = coef[2 * j] @ y
    k2 = coef[2 * j + 1] @ (y + 0.5 * h * k1)
    k3 = coef[2 * j + 1] @ (y + 0.5 * h * k2)
    k4 = coef[2 * j + 2] @ (y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _mgs(y: np.ndarray, logscale: np.ndarray) -> np.ndarray:
    y = y.copy()
    for c in range(y.shape[1]):
        for p in range(c):
            y[:, c] -= np.vdot(y[:, p], y[:, c]) * y[:, p]
        nrm = np.sqrt(np.sum(y[:, c].real ** 2 + y[:, c].imag ** 2))
        if nrm > 0.0:
            y[:, c] /= nrm
            logscale[c] += np.log(nrm)
    return y


def rk4_trajectory(coef, y0, h):
    """Classical RK4 over the tabulated coefficient; returns every node state."""
    coef = np.asarray(coef, dtype=np.complex128)
    y = np.array(y0, dtype=np.complex128, copy=True)
    steps = (coef.shape[0] - 1) // 2
    out = np.empty((steps + 1,) + y.shape, dtype=np.complex128)
    out[0] = y
    for j in range(steps):
        y = _step(coef, j, h, y)
        out[j + 1] = y
    return out


def rk4_subspace(coef, y0, h):
    """RK4 propagation of a column subspace, re-orthonormalized every step."""
    coef = np.asarray(coef, dtype=np.complex128)
    y = np.array(y0, dtype=np.complex128, copy=True)
    logscale = np.zeros(y.shape[1])
    y = _mgs(y, logscale)
    for j in range((coef.shape[0] - 1) // 2):
        y = _mgs(_step(coef, j, h, y), logscale)
    return y, logscale
