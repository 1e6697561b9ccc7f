"""One-dimensional Dirac operators ``K d/dx + V(x)`` with matrix potentials.

The kinetic symbol ``K`` is block diagonal with 2x2 blocks ``v_b (-i sigma_2)``
where ``v_b > 0`` are Fermi velocities.  Besides pointwise evaluation this
module provides

* finite-difference action on :class:`~susy_dirac.numkit.GridFunction`,
* a staggered lattice discretization that is exactly Hermitian and free of
  doubler branches,
* a shooting refinement of discrete levels (including levels embedded in a
  continuum), and
* flux-normalized transfer-matrix reflection coefficients.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize_scalar

from .numkit import Grid, GridFunction, eigen_window, integrate_linear_ode
from .numkit.ode import propagate_subspace

SIGMA0 = np.eye(2, dtype=np.complex128)
SIGMA1 = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=np.complex128)
#: ``-i sigma_2``, the kinetic symbol of a unit-velocity 2x2 block.
J = -1j * SIGMA2


def matrix_stack(x, rows) -> np.ndarray:
    """Assemble ``x.shape + (n, n)`` complex matrices from broadcastable entries."""
    x = np.asarray(x, dtype=float)
    n = len(rows)
    out = np.zeros(x.shape + (n, n), dtype=np.complex128)
    for i, row in enumerate(rows):
        for j, val in enumerate(row):
            out[..., i, j] = val
    return out


def vector_stack(x, entries) -> np.ndarray:
    """Assemble ``x.shape + (n,)`` complex vectors from broadcastable entries."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape + (len(entries),), dtype=np.complex128)
    for i, val in enumerate(entries):
        out[..., i] = val
    return out


class MatrixField:
    """Evaluable matrix-valued function of ``x``.

    Parameters
    ----------
    func : callable
        Vectorized ``x -> array`` of shape ``x.shape + (dim, dim)``.
    dim : int
        2 for spinor potentials, 4 for bispinor potentials.
    deriv : callable, optional
        Analytic ``x``-derivative with the same calling convention.
    asymptotes : (ndarray, ndarray), optional
        Limits at ``-inf`` and ``+inf``.
    hermitian : bool
        Whether the field is expected to be Hermitian pointwise.
    """

    def __init__(
        self,
        func: Callable[[np.ndarray], np.ndarray],
        dim: int,
        deriv: Callable[[np.ndarray], np.ndarray] | None = None,
        asymptotes: tuple[np.ndarray, np.ndarray] | None = None,
        hermitian: bool = True,
        name: str = "",
    ):
        if dim not in (2, 4):
            raise ValueError(f"dim must be 2 or 4, got {dim}")
        self._func = func
        self._deriv = deriv
        self.dim = dim
        self.asymptotes = None
        if asymptotes is not None:
            lo, hi = (np.asarray(a, dtype=np.complex128) for a in asymptotes)
            self.asymptotes = (lo, hi)
        self.hermitian = hermitian
        self.name = name

    @classmethod
    def constant(cls, matrix, name: str = "") -> "MatrixField":
        m = np.asarray(matrix, dtype=np.complex128)
        dim = m.shape[0]

        def f(x):
            return np.broadcast_to(m, np.shape(x) + m.shape).copy()

        def df(x):
            return np.zeros(np.shape(x) + m.shape, dtype=np.complex128)

        return cls(f, dim, deriv=df, asymptotes=(m, m), name=name)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.asarray(self._func(x), dtype=np.complex128)
        if out.shape != x.shape + (self.dim, self.dim):
            raise ValueError(f"field returned shape {out.shape} for input shape {x.shape}")
        return out

    @property
    def has_derivative(self) -> bool:
        return self._deriv is not None

    def derivative(self, x) -> np.ndarray:
        if self._deriv is None:
            raise AttributeError(f"field {self.name or '<anonymous>'} has no analytic derivative")
        x = np.asarray(x, dtype=float)
        return np.asarray(self._deriv(x), dtype=np.complex128)

    def hermiticity_defect(self, x) -> float:
        v = self(np.asarray(x, dtype=float))
        return float(np.abs(v - np.conj(np.swapaxes(v, -1, -2))).max())

    def asymptote_defect(self, at: float = 40.0) -> float:
        """Mismatch between stored limits and evaluation at ``x = -at, +at``."""
        if self.asymptotes is None:
            raise AttributeError("field carries no asymptotic values")
        lo, hi = self.asymptotes
        v = self(np.array([-at, at]))
        return float(max(np.abs(v[0] - lo).max(), np.abs(v[1] - hi).max()))

    def conjugated(self, T: np.ndarray, name: str = "") -> "MatrixField":
        """Field ``T^{-1} F(x) T`` for a constant invertible ``T``."""
        T = np.asarray(T, dtype=np.complex128)
        Ti = np.linalg.inv(T)
        deriv = None
        if self._deriv is not None:
            deriv = lambda x: Ti @ self.derivative(x) @ T  # noqa: E731
        asym = None
        if self.asymptotes is not None:
            asym = tuple(Ti @ a @ T for a in self.asymptotes)
        return MatrixField(lambda x: Ti @ self(x) @ T, self.dim, deriv, asym, self.hermitian, name)


def kinetic_symbol(velocities: Sequence[float]) -> np.ndarray:
    """Block-diagonal ``diag(v_1 J, v_2 J, ...)`` with ``J = -i sigma_2``."""
    n = 2 * len(velocities)
    K = np.zeros((n, n), dtype=np.complex128)
    for b, v in enumerate(velocities):
        K[2 * b : 2 * b + 2, 2 * b : 2 * b + 2] = v * J
    return K


class GridTooCoarseError(ValueError):
    """Grid spacing exceeds what the lattice discretization accepts."""


class DiracOperator:
    """Dirac operator ``K d/dx + V(x)`` with positive Fermi velocities.

    Parameters
    ----------
    potential : MatrixField
        Hermitian potential of dimension 2 or 4.
    velocities : sequence of float, optional
        One positive velocity per 2x2 block; defaults to all ones.
    """

    def __init__(self, potential: MatrixField, velocities: Sequence[float] | None = None):
        nb = potential.dim // 2
        if velocities is None:
            velocities = (1.0,) * nb
        velocities = tuple(float(v) for v in velocities)
        if len(velocities) != nb:
            raise ValueError(f"need {nb} velocities for a {potential.dim}x{potential.dim} operator")
        if any(not v > 0 for v in velocities):
            raise ValueError(f"Fermi velocities must be positive, got {velocities}")
        self.potential = potential
        self.velocities = velocities

    @property
    def dim(self) -> int:
        return self.potential.dim

    @property
    def kinetic(self) -> np.ndarray:
        return kinetic_symbol(self.velocities)

    def symbol(self) -> tuple[np.ndarray, MatrixField]:
        return self.kinetic, self.potential

    def apply_jet(self, x, f, df) -> np.ndarray:
        """``K f' + V f`` from pointwise values and derivatives."""
        return np.einsum("ij,...j->...i", self.kinetic, df) + np.einsum(
            "...ij,...j->...i", self.potential(x), f
        )

    def apply(self, f: GridFunction) -> GridFunction:
        """Finite-difference action on sampled spinors (4th-order stencils)."""
        if f.components != self.dim:
            raise ValueError(f"function has {f.components} components, operator needs {self.dim}")
        df = fd_derivative(f.values, f.grid.h)
        x = f.grid.x
        return GridFunction(f.grid, self.apply_jet(x, f.values, df))

    def coefficient(self, energy: complex) -> Callable[[np.ndarray], np.ndarray]:
        """Vectorized ``x -> K^{-1} (E - V(x))`` for the stationary equation."""
        return ode_coefficient(self.kinetic, self.potential, energy)


def ode_coefficient(K: np.ndarray, W: MatrixField, energy: complex):
    Ki = np.linalg.inv(K)
    eye = np.eye(K.shape[0])

    def coef(x):
        return Ki @ (energy * eye - W(x))

    return coef


def fd_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order first derivative along axis 0 with one-sided edge stencils."""
    f = np.asarray(values)
    n = f.shape[0]
    if n < 5:
        raise ValueError("need at least 5 samples")
    d = np.empty_like(f, dtype=np.result_type(f, float))
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return d


def eigen_residual(op: DiracOperator, f: GridFunction, energy: float, margin: float = 0.1) -> float:
    """Relative interior sup-residual ``|(H - E) f| / |f|`` of a sampled spinor.

    ``margin`` is the fraction of the interval dropped at each end.
    """
    r = op.apply(f).values - energy * f.values
    n = f.grid.n_points
    cut = int(margin * n)
    sl = slice(cut, n - cut)
    return float(np.abs(r[sl]).max() / np.abs(f.values).max())


# ---------------------------------------------------------------------------
# asymptotic modes


@dataclass(frozen=True)
class AsymptoticModes:
    """Eigen-decomposition of ``K^{-1}(E - V)`` for a constant potential.

    ``rates`` are the exponents ``mu`` of ``exp(mu x)``.  ``kind`` marks each
    column as ``"right"``/``"left"`` for propagating modes (by the sign of the
    probability current) or ``"grow"``/``"decay"`` for evanescent ones, growth
    referring to increasing ``x``.  Propagating columns carry unit flux.
    """

    rates: np.ndarray
    vectors: np.ndarray
    kind: tuple[str, ...]

    def select(self, *kinds: str) -> np.ndarray:
        idx = [i for i, k in enumerate(self.kind) if k in kinds]
        return self.vectors[:, idx]

    def count(self, *kinds: str) -> int:
        return sum(k in kinds for k in self.kind)


def probability_current(K: np.ndarray, v: np.ndarray) -> float:
    """Current ``i v^H K v`` of a constant spinor (real for antisymmetric ``K``)."""
    return float(np.real(1j * np.vdot(v, K @ v)))


def asymptotic_modes(K: np.ndarray, V_inf: np.ndarray, energy: float, tol: float = 1e-9) -> AsymptoticModes:
    M = np.linalg.solve(K, energy * np.eye(K.shape[0]) - V_inf)
    mu, vec = np.linalg.eig(M)
    kinds = []
    vec = vec.astype(np.complex128)
    scale = max(1.0, float(np.abs(mu).max()))
    for i, m in enumerate(mu):
        if abs(m.real) <= tol * scale:
            j = probability_current(K, vec[:, i])
            vec[:, i] /= np.sqrt(abs(j)) if j != 0 else 1.0
            kinds.append("right" if j > 0 else "left")
        else:
            vec[:, i] /= np.linalg.norm(vec[:, i])
            kinds.append("grow" if m.real > 0 else "decay")
    return AsymptoticModes(mu, vec, tuple(kinds))


# ---------------------------------------------------------------------------
# staggered lattice


Closure = tuple[tuple[int, ...], tuple[int, ...]]


@dataclass
class Lattice:
    """Staggered discretization of a :class:`DiracOperator`.

    Attributes
    ----------
    matrix : scipy.sparse.csr_matrix
        Exactly Hermitian lattice Hamiltonian.
    component : ndarray of int
        Spinor component carried by each lattice site.
    position : ndarray of float
        Coordinate of each site.
    closure : tuple
        Terminal component role (0 or 1) of every 2x2 block at the left and
        right walls.
    """

    matrix: sp.csr_matrix
    component: np.ndarray
    position: np.ndarray
    grid: Grid
    closure: Closure
    dim: int = field(default=2)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def eigenpairs(self, center: float, k: int = 8):
        """Eigenpairs closest to ``center`` (shift-invert)."""
        return eigen_window(self.matrix, center, k)

    def tail_mass(self, vectors: np.ndarray) -> np.ndarray:
        """Probability fraction outside the central half of the domain."""
        v = np.atleast_2d(np.asarray(vectors).T).T
        mid = 0.5 * (self.grid.x_min + self.grid.x_max)
        half = 0.5 * self.grid.length
        outer = np.abs(self.position - mid) > 0.5 * half
        w = np.abs(v) ** 2
        return w[outer].sum(axis=0) / w.sum(axis=0)

    def localized_levels(self, center: float, k: int = 8, threshold: float = 1e-4):
        """Eigenvalues near ``center`` whose eigenvector passes the bound-state test."""
        w, v = self.eigenpairs(center, k)
        tm = self.tail_mass(v)
        return w[tm < threshold], tm[tm < threshold]

    def nearest_localized(self, target: float, k: int = 8, threshold: float = 1e-4):
        """Localized eigenvalue closest to ``target``; ``None`` when absent."""
        w, _ = self.localized_levels(target, k, threshold)
        if w.size == 0:
            return None
        return float(w[np.argmin(np.abs(w - target))])

    def component_density(self, vector: np.ndarray) -> dict[int, tuple[np.ndarray, np.ndarray]]:
        """Map component -> (positions, |amplitude|^2 / h) for plotting."""
        out = {}
        for c in range(self.dim):
            m = self.component == c
            out[c] = (self.position[m], np.abs(vector[m]) ** 2 / self.grid.h)
        return out


def _site_layout(nb: int, n: int, closure: Closure):
    """Offsets (0 node, 0.5 half) and site counts of every component."""
    left, right = closure
    offset, count = [], []
    for b in range(nb):
        for role in (0, 1):
            if role == left[b]:
                offset.append(0.0)
                count.append(n if right[b] == role else n - 1)
            else:
                offset.append(0.5)
                count.append(n - 1)
    return offset, count


def dirichlet_components(closure_side: Sequence[int]) -> list[int]:
    """Components forced to vanish beyond a wall for the given terminal roles."""
    return [2 * b + (1 - t) for b, t in enumerate(closure_side)]


def _gap_energies(K, V_inf, n_scan=401):
    spread = float(np.abs(np.linalg.eigvalsh(0.5 * (V_inf + V_inf.conj().T))).max()) + 1.0
    out = []
    for E in np.linspace(-spread, spread, n_scan):
        modes = asymptotic_modes(K, V_inf, E, tol=1e-6)
        if modes.count("grow") == modes.count("decay") == K.shape[0] // 2:
            out.append(E)
    return out


def choose_closure(op: DiracOperator, grid: Grid) -> Closure:
    """Wall terminations that admit no spurious edge states inside the gap.

    For each wall and each candidate termination the Dirichlet rows of the
    subspace decaying into the interior must stay well conditioned; the
    candidate maximizing the worst-case smallest singular value over the
    asymptotic gap energies is selected.
    """
    K = op.kinetic
    nb = op.dim // 2
    cands = list(itertools.product((0, 1), repeat=nb))
    chosen = []
    for side, x_wall in (("left", grid.x_min), ("right", grid.x_max)):
        V_inf = op.potential(np.array(x_wall))
        energies = _gap_energies(K, V_inf)
        if not energies:
            chosen.append((0,) * nb)
            continue
        best, best_score = cands[0], -1.0
        for cand in cands:
            rows = dirichlet_components(cand)
            score = np.inf
            for E in energies:
                modes = asymptotic_modes(K, V_inf, E, tol=1e-6)
                Y = modes.select("decay" if side == "left" else "grow")
                Y, _ = np.linalg.qr(Y)
                s = np.linalg.svd(Y[rows, :], compute_uv=False)
                score = min(score, float(s.min()))
            if score > best_score + 1e-12:
                best, best_score = cand, score
        chosen.append(best)
    return (chosen[0], chosen[1])


def discretize(op: DiracOperator, grid: Grid, closure: Closure | str = "auto") -> Lattice:
    """Staggered lattice discretization with hard walls.

    Within each 2x2 block the first role of the terminal component sits on
    the grid nodes and the partner on half nodes, so the first derivative is
    a compact two-point difference.  Couplings between node and half-node
    components are averaged over the two neighbours and evaluated at the
    midpoint.  The lower triangle is filled by conjugation of the upper one,
    which makes the matrix Hermitian bit for bit.

    Parameters
    ----------
    op : DiracOperator
    grid : Grid
        ``grid.h <= 0.05`` is required.
    closure : tuple or "auto"
        Terminal roles per block at both walls, see :func:`choose_closure`.

    Raises
    ------
    GridTooCoarseError
        If the grid spacing exceeds 0.05.
    """
    h = grid.h
    if h > 0.05:
        raise GridTooCoarseError(f"grid spacing {h:.4g} exceeds 0.05")
    if closure == "auto":
        closure = choose_closure(op, grid)
    nb = op.dim // 2
    n = grid.n_points
    offset, count = _site_layout(nb, n, closure)
    base = np.concatenate([[0], np.cumsum(count)]).astype(int)
    size = int(base[-1])
    comp = np.concatenate([np.full(count[c], c) for c in range(op.dim)])
    pos = np.concatenate([grid.x_min + (np.arange(count[c]) + offset[c]) * h for c in range(op.dim)])

    # potential on the quarter grid: index q <-> x_min + q h / 4
    xq = grid.x_min + np.arange(4 * (n - 1) + 1) * (h / 4.0)
    Wq = op.potential(xq)
    K = op.kinetic

    rows, cols, vals = [], [], []

    def add(i, j, v):
        rows.append(i)
        cols.append(j)
        vals.append(v)

    for a in range(op.dim):
        ja = np.arange(count[a])
        qa = (4 * (ja + offset[a])).astype(int)
        # diagonal
        add(base[a] + ja, base[a] + ja, Wq[qa, a, a].real.astype(np.complex128))
        for b in range(a + 1, op.dim):
            if offset[a] == offset[b]:
                m = min(count[a], count[b])
                j = np.arange(m)
                q = (4 * (j + offset[a])).astype(int)
                add(base[a] + j, base[b] + j, Wq[q, a, b])
                continue
            # neighbours of each a-site at +/- h/2
            if offset[a] == 0.0:
                shifts = ((0, +1), (-1, -1))  # (index shift of b, direction)
            else:
                shifts = ((+1, +1), (0, -1))
            same_block = (a // 2 == b // 2)
            for dj, sgn in shifts:
                jb = ja + dj
                ok = (jb >= 0) & (jb < count[b])
                i_idx = base[a] + ja[ok]
                j_idx = base[b] + jb[ok]
                qmid = qa[ok] + sgn  # quarter point between the two sites
                v = 0.5 * Wq[qmid, a, b]
                if same_block and K[a, b] != 0:
                    v = v + sgn * K[a, b].real / h
                add(i_idx, j_idx, v)

    r = np.concatenate(rows)
    c = np.concatenate(cols)
    v = np.concatenate(vals)
    upper = sp.coo_matrix((v, (r, c)), shape=(size, size)).tocsr()
    diag = sp.diags(upper.diagonal().real)
    strict = sp.triu(upper, k=1)
    mat = (strict + strict.conj().T + diag).tocsr()
    mat.sort_indices()
    return Lattice(mat, comp, pos, grid, closure, op.dim)


def collocated_matrix(K: np.ndarray, W: MatrixField, grid: Grid) -> np.ndarray:
    """Dense collocated central-difference matrix of ``K d/dx + W``.

    Only Hermitian for real antisymmetric ``K``; kept for symbol-level
    comparisons on small grids (it carries doubler branches).
    """
    n = grid.n_points
    D = (np.eye(n, k=1) - np.eye(n, k=-1)) / (2 * grid.h)
    Wx = W(grid.x)
    dim = K.shape[0]
    H = np.kron(D, K)
    for i in range(n):
        H[i * dim : (i + 1) * dim, i * dim : (i + 1) * dim] += Wx[i]
    return H


# ---------------------------------------------------------------------------
# shooting refinement


class Shooter:
    """Matching-determinant shooting for levels of ``K d/dx + W``.

    The solutions decaying toward each wall are propagated to ``x_match``
    with orthonormalized fixed-step RK4; the smallest singular value of the
    joint basis vanishes exactly at an eigenvalue.  Levels embedded in a
    continuum are handled the same way since only evanescent channels enter
    the bases.
    """

    def __init__(
        self,
        K: np.ndarray,
        W: MatrixField,
        x_left: float,
        x_right: float,
        x_match: float = 0.0,
        step: float = 0.0025,
        backend: str | None = None,
    ):
        self.K = np.asarray(K, dtype=np.complex128)
        self.Ki = np.linalg.inv(self.K)
        self.W = W
        self.x_left, self.x_right, self.x_match = float(x_left), float(x_right), float(x_match)
        self.backend = backend
        nl = max(2, int(np.ceil((x_match - x_left) / step)))
        nr = max(2, int(np.ceil((x_right - x_match) / step)))
        self.h_left = (x_match - x_left) / nl
        self.h_right = (x_right - x_match) / nr
        self._wl = W(np.linspace(x_left, x_match, 2 * nl + 1))
        self._wr = W(np.linspace(x_right, x_match, 2 * nr + 1))
        self._winf = (W(np.array(x_left)), W(np.array(x_right)))

    def _table(self, wtab, E):
        n = self.K.shape[0]
        return np.ascontiguousarray(self.Ki @ (E * np.eye(n) - wtab))

    def bases(self, E: float):
        ml = asymptotic_modes(self.K, self._winf[0], E)
        mr = asymptotic_modes(self.K, self._winf[1], E)
        yl0 = ml.select("grow")
        yr0 = mr.select("decay")
        yl, _ = propagate_subspace(self._table(self._wl, E), yl0, self.h_left, self.backend)
        yr, _ = propagate_subspace(self._table(self._wr, E), yr0, -self.h_right, self.backend)
        return yl, yr

    def mismatch(self, E: float) -> float:
        """Smallest singular value of the joint decaying basis at ``x_match``."""
        yl, yr = self.bases(E)
        if yl.shape[1] == 0 or yr.shape[1] == 0:
            return 1.0
        return float(np.linalg.svd(np.hstack([yl, yr]), compute_uv=False).min())

    def refine(self, guess: float, width: float = 5e-3, xatol: float = 1e-12) -> tuple[float, float]:
        """Minimize the mismatch on ``[guess - width, guess + width]``.

        The squared mismatch is minimized in the offset from the current
        centre, so the optimizer's relative tolerance acts on a small number;
        a second pass re-centres on the first result.

        Returns the refined energy and the residual mismatch there.
        """
        center, w = float(guess), float(width)
        for _ in range(2):
            res = minimize_scalar(
                lambda u: self.mismatch(center + u) ** 2,
                bounds=(-w, w),
                method="bounded",
                options={"xatol": xatol, "maxiter": 500},
            )
            center = center + float(res.x)
            w = min(w, max(100 * abs(float(res.x)), 1e-7))
        return center, self.mismatch(center)


# ---------------------------------------------------------------------------
# scattering


@dataclass(frozen=True)
class ScatteringResult:
    """Reflection data at one energy.

    ``reflection`` is the flux-normalized reflection matrix for waves incident
    from the left; ``transmission`` is filled when a single open channel lets
    it be extracted without orthonormalization.
    """

    energy: float
    reflection: np.ndarray
    transmission: np.ndarray | None

    @property
    def reflection_magnitude(self) -> float:
        return float(np.linalg.norm(self.reflection, 2)) if self.reflection.size else 0.0


class NoPropagatingChannelError(ValueError):
    """Energy lies in a gap of the asymptotic problem."""


def scattering(
    K: np.ndarray,
    W: MatrixField,
    energy: float,
    x_left: float,
    x_right: float,
    tol: float = 1e-11,
    step: float = 0.0025,
    backend: str | None = None,
) -> ScatteringResult:
    """Transfer-matrix reflection for ``K d/dx + W`` at ``energy``.

    Parameters
    ----------
    K : ndarray
        Constant kinetic symbol.
    W : MatrixField
        Potential, assumed constant beyond ``[x_left, x_right]``.
    energy : float
    x_left, x_right : float
        Matching points far outside the interaction region.

    Raises
    ------
    NoPropagatingChannelError
        If no propagating channel exists at one of the ends.
    """
    K = np.asarray(K, dtype=np.complex128)
    ml = asymptotic_modes(K, W(np.array(x_left)), energy)
    mr = asymptotic_modes(K, W(np.array(x_right)), energy)
    if ml.count("right") == 0 or mr.count("right") == 0:
        raise NoPropagatingChannelError(f"no propagating channel at E={energy}")
    coef = ode_coefficient(K, W, energy)
    if ml.count("grow", "decay") == 0 and mr.count("grow", "decay") == 0 and ml.count("right") == 1:
        y0 = mr.select("right")[:, 0]
        sol = integrate_linear_ode(coef, y0, x_right, x_left, tol=tol)
        c = np.linalg.solve(ml.vectors, sol.final)
        i_in = ml.kind.index("right")
        i_out = ml.kind.index("left")
        a, b = c[i_in], c[i_out]
        return ScatteringResult(energy, np.array([[b / a]]), np.array([[1.0 / a]]))
    # general case: propagate the outgoing plus decaying span with re-orthonormalization
    y0 = np.hstack([mr.select("decay"), mr.select("right")])
    n = int(np.ceil((x_right - x_left) / step))
    xs = np.linspace(x_right, x_left, 2 * n + 1)
    tab = np.ascontiguousarray(coef(xs))
    Y, _ = propagate_subspace(tab, y0, -(x_right - x_left) / n, backend)
    C = np.linalg.solve(ml.vectors, Y)
    kin = [i for i, k in enumerate(ml.kind) if k == "right"]
    kout = [i for i, k in enumerate(ml.kind) if k == "left"]
    kbad = [i for i, k in enumerate(ml.kind) if k == "decay"]  # blows up toward -inf
    A = np.vstack([C[kin], C[kbad]])
    R = np.zeros((len(kout), len(kin)), dtype=np.complex128)
    for col in range(len(kin)):
        rhs = np.zeros(A.shape[0], dtype=np.complex128)
        rhs[col] = 1.0
        v = np.linalg.lstsq(A, rhs, rcond=None)[0]
        R[:, col] = C[kout] @ v
    return ScatteringResult(energy, R, None)
