"""Darboux (supersymmetric) transformations of 2x2 Dirac operators.

From two seed spinors ``u_a`` with ``(H - eps_a) u_a = 0`` the transformation
matrix ``U = (u_1, u_2)`` defines

* the intertwiner ``L = d/dx - A`` with ``A = U_x U^{-1}``,
* the partner potential ``V~ = V - i [sigma_2, A]``, and
* the missing states, the columns of ``(U^{-1})^dagger``.

Seeds are supplied as closures together with analytic derivatives; every
derivative used downstream comes from those closures or from the stationary
equation itself, never from numerical differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .dirac import J, SIGMA2, SIGMA3, DiracOperator, MatrixField, matrix_stack
from .numkit import Grid, GridFunction

Jet = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]


class SingularTransformError(ValueError):
    """The transformation matrix (or a chiral seed component) has a node."""

    def __init__(self, x: float, what: str = "det U"):
        self.x = float(x)
        super().__init__(f"{what} vanishes near x = {self.x:.10g}")


class NonHermitianTransformError(ValueError):
    """The seeds produce a non-Hermitian partner potential."""


class SeedError(ValueError):
    """A seed does not solve the stationary equation at its eigenvalue."""


# ---------------------------------------------------------------------------
# spinor jets


class SpinorFunction:
    """Spinor-valued function carrying analytic first and second derivatives.

    Parameters
    ----------
    value, d1, d2 : callable
        Vectorized ``x -> (..., dim)`` closures for the function and its
        derivatives.  ``d2`` may be omitted when only first order is needed.
    """

    def __init__(self, value, d1, d2=None, label: str = ""):
        self.value, self.d1, self.d2 = value, d1, d2
        self.label = label

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        d2 = self.d2(x) if self.d2 is not None else None
        return self.value(x), self.d1(x), d2

    def sample(self, grid: Grid) -> GridFunction:
        return GridFunction(grid, self.value(grid.x))

    @classmethod
    def from_equation(cls, op: DiracOperator, energy: complex, value, label: str = "") -> "SpinorFunction":
        """Jet of an exact solution: derivatives read off ``K f' = (E - V) f``.

        Only valid when ``value`` really solves the stationary equation.
        """
        K = op.kinetic
        Ki = np.linalg.inv(K)
        V = op.potential

        def d1(x):
            f = value(x)
            return np.einsum("ij,...j->...i", Ki, energy * f - np.einsum("...ij,...j->...i", V(x), f))

        def d2(x):
            f = value(x)
            df = d1(x)
            rhs = energy * df - np.einsum("...ij,...j->...i", V(x), df)
            rhs = rhs - np.einsum("...ij,...j->...i", V.derivative(x), f)
            return np.einsum("ij,...j->...i", Ki, rhs)

        return cls(value, d1, d2, label)


def _mv(M, v):
    return np.einsum("...ij,...j->...i", M, v)


def _dag(M):
    return np.conj(np.swapaxes(M, -1, -2))


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class SeedPair:
    """Factorization energies and seed spinors.

    ``u1``/``u2`` are vectorized closures ``x -> (..., 2)`` solving
    ``(H - eps_a) u_a = 0``.  ``du1``/``du2`` are their analytic derivatives;
    when omitted they are taken from the stationary equation.
    """

    eps1: float
    eps2: float
    u1: Callable[[np.ndarray], np.ndarray]
    u2: Callable[[np.ndarray], np.ndarray]
    du1: Callable[[np.ndarray], np.ndarray] | None = None
    du2: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if not self.eps1 < self.eps2:
            raise ValueError(f"need eps1 < eps2, got {self.eps1} and {self.eps2}")


@dataclass(frozen=True)
class TransformData:
    """Everything produced by :func:`build_transform`.

    Attributes
    ----------
    seed : SeedPair
    H : DiracOperator
        Original operator.
    U, dU : callable
        Transformation matrix and its derivative.
    A, dA : callable
        Intertwiner coefficient ``U_x U^{-1}`` and its derivative
        (``dA`` is ``None`` when ``V`` has no analytic derivative).
    Vtilde : MatrixField
        Partner potential.
    """

    seed: SeedPair
    H: DiracOperator
    U: Callable[[np.ndarray], np.ndarray]
    dU: Callable[[np.ndarray], np.ndarray]
    A: Callable[[np.ndarray], np.ndarray]
    dA: Callable[[np.ndarray], np.ndarray] | None
    Vtilde: MatrixField
    det_min: float = field(default=np.nan)

    @property
    def Htilde(self) -> DiracOperator:
        return DiracOperator(self.Vtilde)

    @property
    def eps(self) -> tuple[float, float]:
        return self.seed.eps1, self.seed.eps2

    def L_coefficient(self, x) -> np.ndarray:
        """``C(x)`` in ``L = d/dx + C(x)``, i.e. ``-A``."""
        return -self.A(x)

    def missing(self, x) -> np.ndarray:
        """``(U^{-1})^dagger``; its columns are the missing states."""
        return _dag(np.linalg.inv(self.U(np.asarray(x, dtype=float))))

    def missing1(self, x) -> np.ndarray:
        return self.missing(x)[..., :, 0]

    def missing2(self, x) -> np.ndarray:
        return self.missing(x)[..., :, 1]

    def missing_jet(self, index: int) -> SpinorFunction:
        """Jet of missing state ``index`` (0 or 1) from ``((U^{-1})^dagger)' = -(U^{-1} A)^dagger``."""

        def value(x):
            return self.missing(x)[..., :, index]

        def d1(x):
            Ui = np.linalg.inv(self.U(x))
            return (-_dag(Ui @ self.A(x)))[..., :, index]

        def d2(x):
            if self.dA is None:
                raise AttributeError("second derivative needs an analytic potential derivative")
            Ui = np.linalg.inv(self.U(x))
            A = self.A(x)
            # (U^{-1} A)' = -U^{-1} A A + U^{-1} A'
            return (-_dag(-Ui @ A @ A + Ui @ self.dA(x)))[..., :, index]

        eps = self.eps[index]
        return SpinorFunction(value, d1, d2, label=f"missing state at {eps:g}")

    def missing_states(self, grid: Grid, tol: float = 1e-6) -> list[tuple[GridFunction, bool]]:
        """Sampled missing states, normalized when square integrable.

        Square integrability is judged by comparing the norm on the grid
        with the norm on its central half; unnormalizable states are
        returned as sampled and flagged ``False``.
        """
        out = []
        x = grid.x
        inner = np.abs(x - 0.5 * (grid.x_min + grid.x_max)) <= 0.25 * grid.length
        for idx in (0, 1):
            f = GridFunction(grid, self.missing(x)[:, :, idx])
            dens = f.density()
            full = np.sum(dens)
            half = np.sum(dens[inner])
            ok = bool(np.isfinite(full) and full > 0 and (full - half) <= tol * full)
            out.append((f.normalized() if ok else f, ok))
        return out


# ---------------------------------------------------------------------------
# construction


def seed_residual(H: DiracOperator, eps: float, u, du, x) -> float:
    """Relative residual of ``K u' + V u - eps u`` on samples ``x``."""
    uv, duv = u(x), du(x)
    r = np.einsum("ij,...j->...i", H.kinetic, duv) + _mv(H.potential(x), uv) - eps * uv
    scale = np.maximum(np.linalg.norm(uv, axis=-1) + np.linalg.norm(duv, axis=-1), 1e-300)
    return float((np.linalg.norm(r, axis=-1) / scale).max())


_FD_SEED_TOL = 1e-6


def _difference_mismatch(u, du, x, h: float = 1e-4) -> float:
    """Relative gap between ``du`` and a fourth-order central difference of ``u``."""
    fd = (u(x - 2 * h) - 8 * u(x - h) + 8 * u(x + h) - u(x + 2 * h)) / (12 * h)
    d = du(x)
    scale = np.maximum(np.linalg.norm(u(x), axis=-1) + np.linalg.norm(d, axis=-1), 1e-300)
    return float((np.linalg.norm(fd - d, axis=-1) / scale).max())


def certify_nodeless(det: Callable[[np.ndarray], np.ndarray], x_range: tuple[float, float],
                     n_samples: int = 10_000, floor: float = 1e-10, what: str = "det U") -> float:
    """Check ``|det(x)| >= floor`` on a dense sample plus bisection near minima.

    Returns the smallest sampled ``|det|``.

    Raises
    ------
    SingularTransformError
        Carrying the location of the (near) zero.
    """
    x = np.linspace(x_range[0], x_range[1], n_samples)
    d = np.asarray(det(x), dtype=np.complex128)
    ad = np.abs(d)
    if not np.all(np.isfinite(ad)):
        i = int(np.argmax(~np.isfinite(ad)))
        raise SingularTransformError(x[i], what)
    # sign changes of a real-valued determinant pin down a zero
    re = d.real
    flips = np.nonzero(np.sign(re[:-1]) * np.sign(re[1:]) < 0)[0]
    if flips.size and np.abs(d.imag).max() <= 1e-12 * ad.max():
        i = int(flips[0])
        lo, hi = x[i], x[i + 1]
        flo = np.sign(re[i])
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            fm = np.real(det(np.array(mid)))
            if np.sign(fm) == flo:
                lo = mid
            else:
                hi = mid
        raise SingularTransformError(0.5 * (lo + hi), what)
    # local minima: refine and compare with the floor
    interior = np.nonzero((ad[1:-1] <= ad[:-2]) & (ad[1:-1] <= ad[2:]))[0] + 1
    cands = [int(np.argmin(ad))] + [int(i) for i in interior[:50]]
    best = float(ad.min())
    for i in cands:
        lo, hi = x[max(i - 1, 0)], x[min(i + 1, n_samples - 1)]
        if hi <= lo:
            continue
        res = minimize_scalar(lambda s: float(np.abs(det(np.array(s)))), bounds=(lo, hi), method="bounded")
        best = min(best, float(res.fun))
        if res.fun < floor:
            raise SingularTransformError(res.x, what)
    if best < floor:
        raise SingularTransformError(x[int(np.argmin(ad))], what)
    return best


def build_transform(
    H: DiracOperator,
    seed: SeedPair,
    x_range: tuple[float, float] = (-20.0, 20.0),
    seed_tol: float = 1e-8,
    allow_non_hermitian: bool = False,
) -> TransformData:
    """Construct ``U``, ``A``, ``V~`` and the missing states from seeds.

    Parameters
    ----------
    H : DiracOperator
        2x2 operator with unit Fermi velocity.
    seed : SeedPair
    x_range : (float, float)
        Working interval on which the seeds and ``det U`` are certified.
    seed_tol : float
        Allowed relative residual of the seed equations.

    Raises
    ------
    SeedError
        A seed fails its stationary equation.
    SingularTransformError
        ``det U`` vanishes on the working interval.
    NonHermitianTransformError
        The partner potential is not Hermitian (unless allowed).
    """
    if H.dim != 2 or H.velocities != (1.0,):
        raise ValueError("Darboux construction needs a 2x2 operator with unit velocity")
    Ki = np.linalg.inv(J)
    V = H.potential

    def from_eq(u, eps):
        return lambda x: np.einsum("ij,...j->...i", Ki, eps * u(x) - _mv(V(x), u(x)))

    du1 = seed.du1 or from_eq(seed.u1, seed.eps1)
    du2 = seed.du2 or from_eq(seed.u2, seed.eps2)
    xs = np.linspace(x_range[0], x_range[1], 401)
    # equation-derived derivatives make the seed residual vacuous; compare with differences instead
    for k, (u, given, eps) in enumerate(((seed.u1, seed.du1, seed.eps1), (seed.u2, seed.du2, seed.eps2)), 1):
        if given is None:
            r = _difference_mismatch(u, from_eq(u, eps), xs)
            if r > _FD_SEED_TOL:
                raise SeedError(f"seed u{k} is not a solution at eps={eps} (difference mismatch {r:.3e})")
    for k, (eps, u, du) in enumerate(((seed.eps1, seed.u1, du1), (seed.eps2, seed.u2, du2)), 1):
        r = seed_residual(H, eps, u, du, xs)
        if r > seed_tol:
            raise SeedError(f"seed u{k} residual {r:.3e} exceeds {seed_tol:.1e} at eps={eps}")

    Lam = np.diag([seed.eps1, seed.eps2]).astype(np.complex128)

    def U(x):
        x = np.asarray(x, dtype=float)
        return np.stack([seed.u1(x), seed.u2(x)], axis=-1)

    def dU(x):
        x = np.asarray(x, dtype=float)
        return np.stack([du1(x), du2(x)], axis=-1)

    def A(x):
        return dU(x) @ np.linalg.inv(U(x))

    dA = None
    if V.has_derivative:

        def d2U(x):
            u, du = U(x), dU(x)
            return Ki @ (du @ Lam - V.derivative(x) @ u - V(x) @ du)

        def _dA(x):
            a = A(x)
            return d2U(x) @ np.linalg.inv(U(x)) - a @ a

        dA = _dA

    def det(x):
        return np.linalg.det(U(x))

    det_min = certify_nodeless(det, x_range)

    def vt(x):
        a = A(x)
        return V(x) - 1j * (SIGMA2 @ a - a @ SIGMA2)

    vt_deriv = None
    if dA is not None:

        def _vt_deriv(x):
            da = dA(x)
            return V.derivative(x) - 1j * (SIGMA2 @ da - da @ SIGMA2)

        vt_deriv = _vt_deriv

    Vtilde = MatrixField(vt, 2, deriv=vt_deriv, name="Vtilde")
    defect = Vtilde.hermiticity_defect(xs) / max(1.0, float(np.abs(Vtilde(xs)).max()))
    if defect > 1e-8 and not allow_non_hermitian:
        raise NonHermitianTransformError(f"partner potential not Hermitian (defect {defect:.3e})")
    return TransformData(seed, H, U, dU, A, dA, Vtilde, det_min)


# ---------------------------------------------------------------------------
# operator identities


def intertwine(t: TransformData, psi: SpinorFunction) -> SpinorFunction:
    """``L psi = psi' - A psi`` with its first derivative."""

    def value(x):
        f, df, _ = psi.value(x), psi.d1(x), None
        return df - _mv(t.A(x), f)

    def d1(x):
        if t.dA is None or psi.d2 is None:
            raise AttributeError("derivative of L psi needs psi'' and A'")
        f, df, d2f = psi(x)
        return d2f - _mv(t.dA(x), f) - _mv(t.A(x), df)

    return SpinorFunction(value, d1, None, label=f"L {psi.label}".strip())


def intertwine_adjoint(t: TransformData, phi: SpinorFunction) -> SpinorFunction:
    """``L^dagger phi = -phi' - A^dagger phi`` with its first derivative."""

    def value(x):
        return -phi.d1(x) - _mv(_dag(t.A(x)), phi.value(x))

    def d1(x):
        f, df, d2f = phi(x)
        return -d2f - _mv(_dag(t.dA(x)), f) - _mv(_dag(t.A(x)), df)

    return SpinorFunction(value, d1, None)


def apply_first_order(op: DiracOperator, f: SpinorFunction, x) -> np.ndarray:
    """Pointwise ``(K d/dx + V) f`` from an analytic jet."""
    return op.apply_jet(x, f.value(x), f.d1(x))


def intertwining_residual(t: TransformData, psi: SpinorFunction, lam: float, x) -> float:
    """``sup |(H~ - lam) L psi| / sup |L psi|`` on samples ``x``."""
    Lpsi = intertwine(t, psi)
    phi = Lpsi.value(x)
    r = apply_first_order(t.Htilde, Lpsi, x) - lam * phi
    return float(np.abs(r).max() / np.abs(phi).max())


def _poly_h(op: DiracOperator, f: SpinorFunction, x, e1: float, e2: float) -> np.ndarray:
    """``(H - e1)(H - e2) f`` from a second-order jet."""
    V = op.potential
    K = op.kinetic
    v, dv, d2v = f(x)
    Hf = np.einsum("ij,...j->...i", K, dv) + _mv(V(x), v)
    dHf = np.einsum("ij,...j->...i", K, d2v) + _mv(V.derivative(x), v) + _mv(V(x), dv)
    HHf = np.einsum("ij,...j->...i", K, dHf) + _mv(V(x), Hf)
    return HHf - (e1 + e2) * Hf + e1 * e2 * v


@dataclass(frozen=True)
class FactorizationReport:
    """Residuals of ``L^dag L - (H-e1)(H-e2)`` and ``L L^dag - (H~-e1)(H~-e2)``."""

    labels: tuple[str, ...]
    residual_LdL: tuple[float, ...]
    residual_LLd: tuple[float, ...]
    threshold: float

    @property
    def max_residual(self) -> float:
        return max(max(self.residual_LdL, default=0.0), max(self.residual_LLd, default=0.0))

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.threshold


def _rel(diff, *terms):
    scale = max(float(np.abs(t).max()) for t in terms)
    return float(np.abs(diff).max() / max(scale, 1e-300))


def verify_factorization(
    t: TransformData,
    H: DiracOperator,
    testbank: Sequence[SpinorFunction],
    x=None,
    threshold: float = 1e-7,
) -> FactorizationReport:
    """Check both second-order factorization identities on analytic test spinors.

    Each test function is used both as ``psi`` (for ``L^dag L``) and as
    ``psi~`` (for ``L L^dag``).  Residuals are sup-norm differences relative
    to the largest of the two sides and the function itself.
    """
    if x is None:
        x = np.linspace(-8.0, 8.0, 801)
    e1, e2 = t.eps
    Ht = t.Htilde
    labels, r1, r2 = [], [], []
    for k, f in enumerate(testbank):
        v = f.value(x)
        Lf = intertwine(t, f)
        lhs = -Lf.d1(x) - _mv(_dag(t.A(x)), Lf.value(x))
        rhs = _poly_h(H, f, x, e1, e2)
        r1.append(_rel(lhs - rhs, lhs, rhs, v))
        Ldf = intertwine_adjoint(t, f)
        lhs2 = Ldf.d1(x) - _mv(t.A(x), Ldf.value(x))
        rhs2 = _poly_h(Ht, f, x, e1, e2)
        r2.append(_rel(lhs2 - rhs2, lhs2, rhs2, v))
        labels.append(f.label or f"f{k}")
    return FactorizationReport(tuple(labels), tuple(r1), tuple(r2), threshold)


def gaussian_testbank(n: int = 10, seed: int = 0) -> list[SpinorFunction]:
    """Gaussian wave packets times constant spinors with analytic derivatives."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        c = rng.normal(size=2) + 1j * rng.normal(size=2)
        x0 = rng.uniform(-2, 2)
        w = rng.uniform(0.6, 1.5)
        q = rng.uniform(-2, 2)

        def g(x, x0=x0, w=w, q=q):
            return np.exp(-((x - x0) ** 2) / (2 * w * w) + 1j * q * x)

        def dlog(x, x0=x0, w=w, q=q):
            return -(x - x0) / (w * w) + 1j * q

        def value(x, c=c, g=g):
            return g(x)[..., None] * c

        def d1(x, c=c, g=g, dlog=dlog):
            return (dlog(x) * g(x))[..., None] * c

        def d2(x, c=c, g=g, dlog=dlog, w=w):
            return ((dlog(x) ** 2 - 1.0 / (w * w)) * g(x))[..., None] * c

        out.append(SpinorFunction(value, d1, d2, label=f"gaussian{k}"))
    return out


def chirality_defect(op: DiracOperator, fs: Sequence[SpinorFunction], x) -> float:
    """``sup |{H, sigma_3} f| / sup |f|`` over test spinors (zero for chiral ``H``)."""
    worst = 0.0
    for f in fs:
        v, dv, _ = f.value(x), f.d1(x), None
        s3v = v @ SIGMA3.T
        s3dv = dv @ SIGMA3.T
        a = op.apply_jet(x, s3v, s3dv)
        b = op.apply_jet(x, v, dv) @ SIGMA3.T
        worst = max(worst, float(np.abs(a + b).max() / np.abs(v).max()))
    return worst


# ---------------------------------------------------------------------------
# chiral scenarios


@dataclass(frozen=True)
class ChiralTransform:
    """Closed-form intertwiner ``L = d/dx + C(x)`` and partner potential."""

    coefficient: Callable[[np.ndarray], np.ndarray]
    Vtilde: MatrixField


def _check_nodes(f, x_range, what):
    return certify_nodeless(f, x_range, what=what)


def chiral_case1(v1, lam1: float, u11, u12, x_range=(-20.0, 20.0)) -> ChiralTransform:
    """Chiral ``H = -i sigma_2 d/dx + v1 sigma_1`` with ``U = ((u11, u11), (u12, -u12))``.

    The seed ``(u11, u12)`` solves the equation at ``lam1`` and its
    ``sigma_3`` image at ``-lam1``.  The intertwiner coefficient is diagonal,
    ``C = diag(v1 - lam1 u12/u11, -v1 + lam1 u11/u12)``, and the partner is
    ``V~ = -(v1 - lam1 (u11^2 + u12^2)/(u11 u12)) sigma_1``.

    Raises
    ------
    SingularTransformError
        If ``u11 u12`` has a node on ``x_range``.
    """
    _check_nodes(lambda x: u11(x) * u12(x), x_range, "u11*u12")

    def coef(x):
        a, b, v = u11(x), u12(x), v1(x)
        return matrix_stack(x, [[v - lam1 * b / a, 0.0], [0.0, -v + lam1 * a / b]])

    def vt(x):
        a, b, v = u11(x), u12(x), v1(x)
        w = -(v - lam1 * (a * a + b * b) / (a * b))
        return matrix_stack(x, [[0.0, w], [w, 0.0]])

    return ChiralTransform(coef, MatrixField(vt, 2, name="Vtilde"))


def chiral_case2(v1, m: float, u12, u22, x_range=(-20.0, 20.0)) -> ChiralTransform:
    """Massive ``H = -i sigma_2 d/dx + v1 sigma_1 + m sigma_3`` with ``U = ((0, u12), (u21, u22))``.

    Seeds sit at ``-m`` and ``0``; the coefficient is lower triangular,
    ``C = ((v1 - m u22/u12, 0), (-m, -v1))`` and
    ``V~ = -(v1 - m u22/u12) sigma_1``.
    """
    _check_nodes(u12, x_range, "u12")

    def coef(x):
        v, r = v1(x), u22(x) / u12(x)
        return matrix_stack(x, [[v - m * r, 0.0], [-m * np.ones_like(v), -v]])

    def vt(x):
        w = -(v1(x) - m * u22(x) / u12(x))
        return matrix_stack(x, [[0.0, w], [w, 0.0]])

    return ChiralTransform(coef, MatrixField(vt, 2, name="Vtilde"))
