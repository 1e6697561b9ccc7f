"""Hermitian eigensolvers.

Dense problems go through LAPACK (``numpy.linalg.eigh``); large sparse lattice
matrices use shift-invert Lanczos windows around target energies.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class NonHermitianError(ValueError):
    """Raised when a matrix fails the Hermiticity precondition."""

    def __init__(self, row: int, col: int, deviation: float):
        self.row, self.col, self.deviation = row, col, deviation
        super().__init__(
            f"matrix is not Hermitian: max asymmetry {deviation:.3e} at entry ({row}, {col})"
        )


def hermiticity_defect(matrix: np.ndarray) -> tuple[float, int, int]:
    """Largest relative entry of ``A - A^H`` and its location."""
    a = np.asarray(matrix)
    d = np.abs(a - a.conj().T)
    scale = max(np.abs(a).max(), np.finfo(float).tiny)
    i, j = np.unravel_index(np.argmax(d), d.shape)
    return float(d[i, j] / scale), int(i), int(j)


def hermitian_eigen(matrix: np.ndarray, rtol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a dense Hermitian matrix.

    Parameters
    ----------
    matrix : (n, n) array_like
        Complex Hermitian matrix.
    rtol : float
        Allowed relative asymmetry ``max|A - A^H| / max|A|``.

    Returns
    -------
    w : (n,) ndarray
        Real eigenvalues in ascending order.
    v : (n, n) ndarray
        Unit-norm eigenvectors as columns.

    Raises
    ------
    NonHermitianError
        If the asymmetry exceeds ``rtol``; the message names the worst entry.
    """
    a = np.asarray(matrix, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    dev, i, j = hermiticity_defect(a)
    if dev > rtol:
        raise NonHermitianError(i, j, dev)
    # symmetrize so LAPACK sees exactly the Hermitian part
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    return w, v


def eigen_window(matrix, center: float, k: int = 6, tol: float = 0.0):
    """Eigenpairs of a sparse Hermitian matrix closest to ``center``.

    Uses ARPACK in shift-invert mode.  Results are sorted by eigenvalue.
    """
    a = sp.csc_matrix(matrix)
    n = a.shape[0]
    k = min(k, n - 2)
    # fixed start vector keeps repeated runs bit-identical
    v0 = np.random.default_rng(0).standard_normal(n)
    try:
        w, v = spla.eigsh(a, k=k, sigma=center, which="LM", tol=tol, v0=v0)
    except RuntimeError:
        # shift landed on an eigenvalue: nudge it off
        w, v = spla.eigsh(a, k=k, sigma=center + 1e-9 * (1.0 + abs(center)), which="LM", tol=tol, v0=v0)
    order = np.argsort(w)
    return w[order], v[:, order]
