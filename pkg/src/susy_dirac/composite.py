"""Composite 4x4 operators built from a Darboux pair ``(H, H~, L)``.

The extended operators are

* ``H0 = diag(H, H~)``,
* the supercharge ``L1 = ((0, L^dag), (L, 0))`` and ``L2 = i Gamma L1`` with
  the grading ``Gamma = sigma_3 (x) sigma_0``,
* the composite ``H_alpha = H0 + alpha L1``.

Every operator is kept as a first-order symbol ``K d/dx + W(x)`` so that the
constant rotation ``R`` can be applied exactly; ``R^{-1} H_alpha R`` has block
diagonal kinetic part with Fermi velocities ``1 + alpha`` and ``1 - alpha``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .darboux import SpinorFunction, TransformData, intertwine
from .dirac import J, SIGMA0, SIGMA1, SIGMA2, SIGMA3, DiracOperator, MatrixField, matrix_stack
from .numkit import GridFunction

_M = np.array(
    [[-1, -1, 1, 1], [1, -1, -1, 1], [1, -1, 1, -1], [1, 1, 1, 1]], dtype=np.complex128
)
GAMMA = np.kron(SIGMA3, SIGMA0)
_I2 = np.eye(2, dtype=np.complex128)
_Z2 = np.zeros((2, 2), dtype=np.complex128)


def rotation_matrix(angle: float, sign: float = 1.0) -> np.ndarray:
    """Constant unitary ``R`` that separates the two Fermi velocities.

    ``R = (1 - i)/(2 sqrt 2) M (sigma_0 (x) exp(-i angle/2 sigma_2))`` with
    ``M`` the fixed +-1 matrix.  ``sign=-1`` flips the overall matrix sign of
    ``M``'s last row; it exists only for fault-injection tests.
    """
    M = _M.copy()
    if sign < 0:
        M[3] = -M[3]
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    rot = c * SIGMA0 - 1j * s * SIGMA2
    return (1 - 1j) / (2 * np.sqrt(2)) * M @ np.kron(SIGMA0, rot)


def _blocks(a, b, c, d):
    return np.block([[a, b], [c, d]])


# ---------------------------------------------------------------------------
# first-order symbols


class Symbol:
    """First-order matrix operator ``K d/dx + W(x)`` acting on analytic jets.

    ``W`` must carry an analytic derivative for compositions.
    """

    def __init__(self, K: np.ndarray, W: MatrixField):
        self.K = np.asarray(K, dtype=np.complex128)
        self.W = W

    def apply(self, x, f, df) -> np.ndarray:
        return np.einsum("ij,...j->...i", self.K, df) + np.einsum("...ij,...j->...i", self.W(x), f)

    def apply_d(self, x, f, df, d2f) -> np.ndarray:
        """Derivative of ``apply``."""
        return (
            np.einsum("ij,...j->...i", self.K, d2f)
            + np.einsum("...ij,...j->...i", self.W.derivative(x), f)
            + np.einsum("...ij,...j->...i", self.W(x), df)
        )

    def compose(self, other: "Symbol", x, f, df, d2f) -> np.ndarray:
        """``self(other f)`` from a second-order jet of ``f``."""
        g = other.apply(x, f, df)
        dg = other.apply_d(x, f, df, d2f)
        return self.apply(x, g, dg)

    def conjugated(self, T: np.ndarray) -> "Symbol":
        Ti = np.linalg.inv(T)
        return Symbol(Ti @ self.K @ T, self.W.conjugated(T))


def _field4(func, deriv, name=""):
    return MatrixField(func, 4, deriv=deriv, name=name)


def supercharge_symbol(t: TransformData) -> Symbol:
    """``L1`` with ``L = d/dx - A`` and ``L^dag = -d/dx - A^dag``."""
    K = _blocks(_Z2, -_I2, _I2, _Z2)

    def w(x):
        a = t.A(x)
        ad = np.conj(np.swapaxes(a, -1, -2))
        out = np.zeros(np.shape(x) + (4, 4), dtype=np.complex128)
        out[..., :2, 2:] = -ad
        out[..., 2:, :2] = -a
        return out

    dw = None
    if t.dA is not None:

        def _dw(x):
            a = t.dA(x)
            out = np.zeros(np.shape(x) + (4, 4), dtype=np.complex128)
            out[..., :2, 2:] = -np.conj(np.swapaxes(a, -1, -2))
            out[..., 2:, :2] = -a
            return out

        dw = _dw

    return Symbol(K, _field4(w, dw, "L1"))


def extended_symbol(t: TransformData) -> Symbol:
    """``H0 = diag(H, H~)``."""
    K = _blocks(J, _Z2, _Z2, J)
    V, Vt = t.H.potential, t.Vtilde

    def w(x):
        out = np.zeros(np.shape(x) + (4, 4), dtype=np.complex128)
        out[..., :2, :2] = V(x)
        out[..., 2:, 2:] = Vt(x)
        return out

    dw = None
    if V.has_derivative and Vt.has_derivative:

        def _dw(x):
            out = np.zeros(np.shape(x) + (4, 4), dtype=np.complex128)
            out[..., :2, :2] = V.derivative(x)
            out[..., 2:, 2:] = Vt.derivative(x)
            return out

        dw = _dw

    return Symbol(K, _field4(w, dw, "H0"))


def second_supercharge_symbol(t: TransformData) -> Symbol:
    """``L2 = i Gamma L1`` (symbol only)."""
    L1 = supercharge_symbol(t)
    G = 1j * GAMMA
    dw = (lambda x: G @ L1.W.derivative(x)) if L1.W.has_derivative else None
    return Symbol(G @ L1.K, _field4(lambda x: G @ L1.W(x), dw, "L2"))


# ---------------------------------------------------------------------------
# composite operator


class CompositeOperator:
    """``H_alpha = H0 + alpha L1`` for a Darboux pair.

    Parameters
    ----------
    transform : TransformData
        Supplies ``H``, ``H~`` and ``L``.
    alpha : float
        Coupling in ``[0, 1)``.
    rotation_angle : float
        Angle entering the rotation ``R``.
    """

    def __init__(self, transform: TransformData, alpha: float, rotation_angle: float = np.pi / 2):
        alpha = float(alpha)
        if not 0.0 <= alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
        self.transform = transform
        self.alpha = alpha
        self.rotation_angle = float(rotation_angle)

    @property
    def H(self) -> DiracOperator:
        return self.transform.H

    @property
    def Htilde(self) -> DiracOperator:
        return self.transform.Htilde

    @property
    def eps(self) -> tuple[float, float]:
        return self.transform.eps

    def with_alpha(self, alpha: float) -> "CompositeOperator":
        return CompositeOperator(self.transform, alpha, self.rotation_angle)

    def symbol(self) -> Symbol:
        H0 = extended_symbol(self.transform)
        L1 = supercharge_symbol(self.transform)
        a = self.alpha
        dw = None
        if H0.W.has_derivative and L1.W.has_derivative:
            dw = lambda x: H0.W.derivative(x) + a * L1.W.derivative(x)  # noqa: E731
        W = _field4(lambda x: H0.W(x) + a * L1.W(x), dw, "H_alpha")
        return Symbol(H0.K + a * L1.K, W)

    def apply_jet(self, x, f, df) -> np.ndarray:
        """Pointwise ``H_alpha f`` from bispinor values and derivatives."""
        return self.symbol().apply(x, f, df)

    def apply(self, f: GridFunction) -> GridFunction:
        """Finite-difference action on a sampled bispinor."""
        from .dirac import fd_derivative

        if f.components != 4:
            raise ValueError("composite operator acts on 4-component functions")
        df = fd_derivative(f.values, f.grid.h)
        return GridFunction(f.grid, self.apply_jet(f.grid.x, f.values, df))

    def rotation(self, sign: float = 1.0) -> np.ndarray:
        return rotation_matrix(self.rotation_angle, sign)

    def rotated_symbol(self, sign: float = 1.0) -> Symbol:
        return self.symbol().conjugated(self.rotation(sign))

    def rotated_potential(self) -> MatrixField:
        """``R^{-1} W R``, the potential of the two-velocity form."""
        return self.rotated_symbol().W

    def rotated(self) -> DiracOperator:
        """Two-velocity Dirac operator with velocities ``(1 + alpha, 1 - alpha)``."""
        return DiracOperator(self.rotated_potential(), (1.0 + self.alpha, 1.0 - self.alpha))


def velocity_defect(alpha: float, angle: float = np.pi / 2, sign: float = 1.0) -> float:
    """``max |R^{-1} K_alpha R - diag((1+alpha) J, (1-alpha) J)|`` for the kinetic symbol."""
    K = _blocks(J, -alpha * _I2, alpha * _I2, J)
    R = rotation_matrix(angle, sign)
    target = _blocks((1 + alpha) * J, _Z2, _Z2, (1 - alpha) * J)
    return float(np.abs(np.linalg.inv(R) @ K @ R - target).max())


# ---------------------------------------------------------------------------
# bispinors


@dataclass(frozen=True)
class Bispinor:
    """Analytic 4-component eigenfunction of the composite operator.

    ``upper``/``lower`` return 2-spinors; ``d_upper``/``d_lower`` their
    derivatives.  ``physical`` is ``False`` when ``sqrt F(lambda)`` is
    imaginary.
    """

    upper: Callable[[np.ndarray], np.ndarray]
    lower: Callable[[np.ndarray], np.ndarray]
    d_upper: Callable[[np.ndarray], np.ndarray]
    d_lower: Callable[[np.ndarray], np.ndarray]
    label: str
    lam: complex
    physical: bool = True

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.concatenate([self.upper(x), self.lower(x)], axis=-1)

    def derivative(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.concatenate([self.d_upper(x), self.d_lower(x)], axis=-1)

    def sample(self, grid) -> GridFunction:
        return GridFunction(grid, self(grid.x))


def sqrt_F(lam: complex, eps1: float, eps2: float) -> complex:
    """Principal ``sqrt((lam - eps1)(lam - eps2))``."""
    return complex(np.sqrt(complex((lam - eps1) * (lam - eps2))))


def _spinor_residual(op: DiracOperator, psi: SpinorFunction, lam, x) -> float:
    r = op.apply_jet(x, psi.value(x), psi.d1(x)) - lam * psi.value(x)
    return float(np.abs(r).max() / np.abs(psi.value(x)).max())


def eigen_bispinor(
    c: CompositeOperator, psi: SpinorFunction, lam: complex, sign: int, x_check=None, tol: float = 1e-8
) -> Bispinor:
    """``Psi = (+-sqrt F(lam) psi, L psi)`` for an analytic solution ``psi`` of ``H``.

    Raises
    ------
    ValueError
        If ``psi`` fails ``(H - lam) psi = 0`` beyond ``tol``.
    """
    if x_check is None:
        x_check = np.linspace(-5, 5, 201)
    r = _spinor_residual(c.H, psi, lam, x_check)
    if r > tol:
        raise ValueError(f"spinor is not an eigenfunction at {lam} (residual {r:.2e})")
    e1, e2 = c.eps
    s = sign * sqrt_F(lam, e1, e2)
    Lpsi = intertwine(c.transform, psi)
    physical = not (np.isreal(lam) and e1 < np.real(lam) < e2)
    return Bispinor(
        upper=lambda x: s * psi.value(x),
        lower=Lpsi.value,
        d_upper=lambda x: s * psi.d1(x),
        d_lower=Lpsi.d1,
        label="plus" if sign > 0 else "minus",
        lam=lam,
        physical=physical,
    )


def missing_bispinor(c: CompositeOperator, index: int) -> Bispinor:
    """``(0, u~_a)`` with eigenvalue ``eps_a`` for every ``alpha``."""
    jet = c.transform.missing_jet(index)
    zero = lambda x: np.zeros(np.shape(x) + (2,), dtype=np.complex128)  # noqa: E731
    return Bispinor(zero, jet.value, zero, jet.d1, f"missing{index + 1}", c.eps[index])


def derivative_bispinor(
    c: CompositeOperator, psi: SpinorFunction, dpsi: SpinorFunction, lam: float, sign: int
) -> Bispinor:
    """``d Psi / d lam`` from ``psi_lam`` and its analytic ``lam``-derivative ``dpsi``.

    It is an eigenfunction of ``H_alpha`` wherever ``dE/d lam`` vanishes.
    """
    e1, e2 = c.eps
    root = sqrt_F(lam, e1, e2)
    s = sign * root
    ds = sign * (2 * lam - e1 - e2) / (2 * root)
    Ld = intertwine(c.transform, dpsi)
    return Bispinor(
        upper=lambda x: ds * psi.value(x) + s * dpsi.value(x),
        lower=Ld.value,
        d_upper=lambda x: ds * psi.d1(x) + s * dpsi.d1(x),
        d_lower=Ld.d1,
        label=f"d{'plus' if sign > 0 else 'minus'}/dlambda",
        lam=lam,
    )


def bispinor_residual(c: CompositeOperator, psi: Bispinor, energy: complex, x) -> float:
    """``sup |(H_alpha - E) Psi| / sup |Psi|``."""
    f = psi(x)
    r = c.apply_jet(x, f, psi.derivative(x)) - energy * f
    return float(np.abs(r).max() / np.abs(f).max())


def composite_energy(c: CompositeOperator, lam: complex, sign: int) -> complex:
    e1, e2 = c.eps
    return lam + sign * c.alpha * sqrt_F(lam, e1, e2)


# ---------------------------------------------------------------------------
# superalgebra checks


def superalgebra_residuals(t: TransformData, fs, x) -> dict[str, float]:
    """Relative residuals of ``[H0, L1]`` and ``{L1, L1} - 2 (H0 - e1)(H0 - e2)``.

    ``fs`` is a sequence of ``(f, df, d2f)`` bispinor jets.
    """
    H0 = extended_symbol(t)
    L1 = supercharge_symbol(t)
    e1, e2 = t.eps
    comm = anti = 0.0
    for f, df, d2f in fs:
        scale = max(float(np.abs(f).max()), 1e-300)
        a = H0.compose(L1, x, f, df, d2f)
        b = L1.compose(H0, x, f, df, d2f)
        comm = max(comm, float(np.abs(a - b).max()) / max(scale, float(np.abs(a).max())))
        LL = 2 * L1.compose(L1, x, f, df, d2f)
        HH = H0.compose(H0, x, f, df, d2f)
        Hf = H0.apply(x, f, df)
        poly = 2 * (HH - (e1 + e2) * Hf + e1 * e2 * f)
        anti = max(anti, float(np.abs(LL - poly).max()) / max(scale, float(np.abs(LL).max())))
    return {"commutator": comm, "anticommutator": anti}


def grading_defects(t: TransformData, x) -> dict[str, float]:
    """Symbol-level ``Gamma H0 Gamma - H0`` and ``Gamma L1 Gamma + L1``."""
    H0 = extended_symbol(t)
    L1 = supercharge_symbol(t)
    G = GAMMA
    return {
        "H0_kinetic": float(np.abs(G @ H0.K @ G - H0.K).max()),
        "H0_potential": float(np.abs(G @ H0.W(x) @ G - H0.W(x)).max()),
        "L1_kinetic": float(np.abs(G @ L1.K @ G + L1.K).max()),
        "L1_potential": float(np.abs(G @ L1.W(x) @ G + L1.W(x)).max()),
    }


# ---------------------------------------------------------------------------
# closed forms of the rotated potential


def chiral_rotated_potential(v1, lam1: float, u11, u12, alpha: float, angle: float) -> MatrixField:
    """Rotated potential for a chiral ``H`` and ``U = ((u11, u11), (u12, -u12))``.

    Only ``angle`` in ``{0, pi/2}`` has a closed form.  The ``V14`` entry uses
    the denominator ``2 u11 u12`` (the one consistent with the generic
    rotation).
    """

    def parts(x):
        a, b, v = u11(x), u12(x), v1(x)
        v13 = lam1 * (a * a + b * b) / (2 * a * b)
        v14 = alpha * lam1 * (a * a - b * b) / (2 * a * b)
        m1 = (1 + alpha) * (-v + v13)
        m2 = (1 - alpha) / (1 + alpha) * m1
        return m1, m2, v13, v14

    if np.isclose(angle, 0.0):

        def f(x):
            m1, m2, v13, v14 = parts(x)
            return matrix_stack(
                x,
                [[m1, 0, v13, v14], [0, -m1, -v14, -v13], [v13, -v14, m2, 0], [v14, -v13, 0, -m2]],
            )

    elif np.isclose(angle, np.pi / 2):

        def f(x):
            m1, m2, v13, v14 = parts(x)
            return matrix_stack(
                x,
                [
                    [0, -m1, 0, v14 - v13],
                    [-m1, 0, -v13 - v14, 0],
                    [0, -v13 - v14, 0, -m2],
                    [v14 - v13, 0, -m2, 0],
                ],
            )

    else:
        raise ValueError("closed form exists only for rotation angles 0 and pi/2")
    return MatrixField(f, 4, name="chiral rotated potential")


def massive_rotated_potential(v1, m: float, u12, u22, alpha: float) -> MatrixField:
    """Rotated potential (angle ``pi/2``) for ``H = J d/dx + v1 sigma_1 + m sigma_3``
    and ``U = ((0, u12), (u21, u22))``."""

    def f(x):
        x = np.asarray(x, dtype=float)
        r = (u22(x) / u12(x))[..., None, None]
        v = np.asarray(v1(x))[..., None, None]

        def v11(a):
            return (1 + a) * (m / 2 * SIGMA3 + (-m / 2 * r + v) * SIGMA1)

        v12 = -m / 2 * (SIGMA3 + r * (SIGMA1 + 1j * alpha * SIGMA2))
        out = np.zeros(x.shape + (4, 4), dtype=np.complex128)
        out[..., :2, :2] = v11(alpha)
        out[..., 2:, 2:] = v11(-alpha)
        out[..., :2, 2:] = v12
        out[..., 2:, :2] = np.conj(np.swapaxes(v12, -1, -2))
        return out + (m * alpha / 2) * GAMMA

    return MatrixField(f, 4, name="massive rotated potential")
