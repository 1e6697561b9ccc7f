"""Spectral map ``E+-(lam) = lam +- alpha sqrt((lam - eps1)(lam - eps2))``.

Pure functions of ``(eps1, eps2, alpha)``: branch values, extrema, the
elliptic contour of complex ``lam`` with real energy, preimage
classification, level-crossing couplings, band thresholds and the critical
couplings at which discrete levels enter a continuum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq


class NoCrossingError(ValueError):
    """No coupling in ``(0, 1)`` realizes the requested coincidence."""


@dataclass(frozen=True)
class SpectralMap:
    """Parameters of the spectral isomorphism.

    Attributes
    ----------
    eps1, eps2 : float
        Factorization energies, ``eps1 < eps2``.
    alpha : float
        Coupling in ``[0, 1)``.
    """

    eps1: float
    eps2: float
    alpha: float

    def __post_init__(self):
        if not self.eps1 < self.eps2:
            raise ValueError(f"need eps1 < eps2, got {self.eps1}, {self.eps2}")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")

    @property
    def delta(self) -> float:
        return 0.5 * (self.eps1 + self.eps2)

    @property
    def width(self) -> float:
        return self.eps2 - self.eps1

    def with_alpha(self, alpha: float) -> "SpectralMap":
        return SpectralMap(self.eps1, self.eps2, alpha)

    def F(self, lam):
        return (lam - self.eps1) * (lam - self.eps2)

    def sqrt_F(self, lam):
        """Principal square root; on the cut ``(eps1, eps2)`` it is ``+i sqrt|F|``."""
        return np.sqrt(np.asarray(self.F(lam), dtype=np.complex128))

    def energy(self, lam, sign: int):
        return lam + sign * self.alpha * self.sqrt_F(lam)

    def real_energy(self, lam, sign: int):
        """``E`` for real ``lam`` in the allowed set, as float."""
        lam = np.asarray(lam, dtype=float)
        return lam + sign * self.alpha * np.sqrt(np.maximum(self.F(lam), 0.0))


def energy(smap: SpectralMap, lam, sign: int):
    """``E+-(lam)`` with the principal square root (complex output)."""
    return smap.energy(lam, sign)


# ---------------------------------------------------------------------------
# extrema


@dataclass(frozen=True)
class Extrema:
    lambda_up: float
    E_up: float
    lambda_down: float
    E_down: float
    delta: float


def extrema(smap: SpectralMap) -> Extrema:
    """Maximum of ``E+`` on ``lam <= eps1`` and minimum of ``E-`` on ``lam >= eps2``."""
    s = np.sqrt(1.0 - smap.alpha**2)
    d, w = smap.delta, smap.width
    return Extrema(d - w / (2 * s), d - s * w / 2, d + w / (2 * s), d + s * w / 2, d)


# ---------------------------------------------------------------------------
# elliptic contour


@dataclass(frozen=True)
class ContourPoint:
    """Complex ``lam`` with real energy.

    ``branch`` is ``"L"``/``"R"`` on the ellipse halves or ``"real-axis"``.
    """

    lam: complex
    branch: str
    energy: float
    sign: int


def ellipse_axes(smap: SpectralMap) -> tuple[float, float]:
    """Semi-axes ``(a, b)`` of the real-energy ellipse in ``Re lam`` and ``Im lam``."""
    a = smap.width / (2 * np.sqrt(1.0 - smap.alpha**2))
    return a, smap.alpha * a


def ellipse_residual(smap: SpectralMap, lam: complex) -> float:
    a, b = ellipse_axes(smap)
    return abs(((lam.real - smap.delta) / a) ** 2 + (lam.imag / b) ** 2 - 1.0)


def _real_branch(smap: SpectralMap, lam: complex) -> tuple[int, complex]:
    ep, em = smap.energy(lam, +1), smap.energy(lam, -1)
    return (1, ep) if abs(ep.imag) <= abs(em.imag) else (-1, em)


def real_energy_contour(smap: SpectralMap, n_samples: int = 256) -> list[ContourPoint]:
    """Sample the ellipse of complex ``lam`` whose energy is real.

    Points are taken at ``theta_k = 2 pi (k + 1/2)/n``, avoiding the real
    axis.  Returns an empty list when ``alpha = 0`` (degenerate ellipse).
    """
    if n_samples < 16:
        raise ValueError("need at least 16 samples")
    if smap.alpha == 0.0:
        return []
    a, b = ellipse_axes(smap)
    out = []
    for k in range(n_samples):
        th = 2 * np.pi * (k + 0.5) / n_samples
        lam = complex(smap.delta + a * np.cos(th), b * np.sin(th))
        sign, E = _real_branch(smap, lam)
        out.append(ContourPoint(lam, "L" if lam.real < smap.delta else "R", float(E.real), sign))
    return out


def midpoint_imaginary_part(smap: SpectralMap) -> float:
    """``|Im lam|`` where the ellipse crosses ``Re lam = Delta`` (energy ``Delta``)."""
    return ellipse_axes(smap)[1]


# ---------------------------------------------------------------------------
# preimages


@dataclass(frozen=True)
class Preimage:
    lam: complex
    sign: int
    location: str  # "left-axis", "right-axis", "cut", "contour-L", "contour-R"


@dataclass(frozen=True)
class EnergyCase:
    """Classification of a real energy.

    ``case`` is one of ``above_eps2``, ``between_Edown_eps2``, ``at_eps2``,
    ``extremal_down``, ``elliptic``, ``extremal_up``, ``at_eps1``,
    ``between_eps1_Eup``, ``below_eps1`` or ``uncoupled``.
    """

    energy: float
    case: str
    preimages: tuple[Preimage, ...]
    special: tuple[str, ...] = field(default=())
    multiplicity: int = 4


def _roots(smap: SpectralMap, E: float) -> list[complex]:
    a2 = smap.alpha**2
    A = 1.0 - a2
    B = -(2 * E - a2 * (smap.eps1 + smap.eps2))
    C = E * E - a2 * smap.eps1 * smap.eps2
    disc = B * B - 4 * A * C
    if disc >= 0:
        q = -0.5 * (B + np.copysign(np.sqrt(disc), B))
        r1 = q / A
        r2 = C / q if q != 0 else r1
        return sorted([complex(r1), complex(r2)], key=lambda z: z.real)
    s = np.sqrt(-disc)
    return [complex(-B / (2 * A), -s / (2 * A)), complex(-B / (2 * A), s / (2 * A))]


def _location(smap: SpectralMap, lam: complex, tol: float) -> str:
    if abs(lam.imag) > tol:
        return "contour-L" if lam.real < smap.delta else "contour-R"
    if lam.real <= smap.eps1 + tol:
        return "left-axis"
    if lam.real >= smap.eps2 - tol:
        return "right-axis"
    return "cut"


def preimages(smap: SpectralMap, E: float, tol: float = 1e-10) -> list[Preimage]:
    """All ``(lam, sign)`` with ``E^sign(lam) = E`` from the quadratic inversion."""
    out = []
    scale = max(1.0, abs(E))
    seen = set()
    for lam in _roots(smap, E):
        if abs(lam.imag) <= 1e-12 * scale:
            lam = complex(lam.real, 0.0)
        for sign in (1, -1):
            val = smap.energy(lam, sign)
            if abs(val - E) <= tol * scale:
                key = (round(lam.real, 12), round(lam.imag, 12), sign)
                if key not in seen:
                    seen.add(key)
                    out.append(Preimage(lam, sign, _location(smap, lam, 1e-12 * scale)))
    return out


def classify_energy(smap: SpectralMap, E: float, tol: float = 1e-10) -> EnergyCase:
    """Locate ``E`` among the fundamental-solution cases and list its preimages."""
    E = float(E)
    pre = tuple(preimages(smap, E, tol))
    scale = max(1.0, abs(E))
    near = lambda a, b: abs(a - b) <= 1e-12 * scale  # noqa: E731
    if smap.alpha == 0.0:
        return EnergyCase(E, "uncoupled", pre)
    ex = extrema(smap)
    e1, e2 = smap.eps1, smap.eps2
    special: tuple[str, ...] = ()
    if near(E, e2):
        case, special = "at_eps2", ("(u2, 0)", "(0, u~2)")
    elif near(E, e1):
        case, special = "at_eps1", ("(u1, 0)", "(0, u~1)")
    elif near(E, ex.E_down):
        case, special = "extremal_down", ("d Psi-/d lambda at lambda_down",)
    elif near(E, ex.E_up):
        case, special = "extremal_up", ("d Psi+/d lambda at lambda_up",)
    elif E > e2:
        case = "above_eps2"
    elif E > ex.E_down:
        case = "between_Edown_eps2"
    elif E > ex.E_up:
        case = "elliptic"
    elif E > e1:
        case = "between_eps1_Eup"
    else:
        case = "below_eps1"
    return EnergyCase(E, case, pre, special)


# ---------------------------------------------------------------------------
# level crossings


def crossing_alpha(lam_a: float, lam_b: float, kind: str, eps1: float, eps2: float, verify: bool = True) -> float:
    """Coupling at which two branch curves of distinct levels meet.

    ``kind="+-"``: ``E+(lam_a) = E-(lam_b)`` with ``lam_a < lam_b`` on one
    side of the gap (both ``>= eps2`` or both ``<= eps1``);
    ``kind="--"``: ``E-(lam_a) = E-(lam_b)`` with ``eps2 <= lam_a < lam_b``;
    ``kind="++"``: ``E+(lam_a) = E+(lam_b)`` with ``lam_a < lam_b <= eps1``.

    Raises
    ------
    NoCrossingError
        If the arguments violate the ordering or the result leaves ``(0, 1)``.
    """
    smap = SpectralMap(eps1, eps2, 0.0)
    fa, fb = (float(np.sqrt(max(smap.F(v), 0.0))) for v in (lam_a, lam_b))
    if kind == "+-" and lam_a < lam_b <= eps1:
        den = fa + fb
        sa, sb = 1, -1
    elif kind in ("+-", "--"):
        if not eps2 <= lam_a < lam_b:
            raise NoCrossingError(f"need eps2 <= lam_a < lam_b for kind {kind}")
        den = fa + fb if kind == "+-" else fb - fa
        sa, sb = (1, -1) if kind == "+-" else (-1, -1)
    elif kind == "++":
        if not lam_a < lam_b <= eps1:
            raise NoCrossingError("need lam_a < lam_b <= eps1 for kind ++")
        den = fa - fb
        sa, sb = 1, 1
    else:
        raise ValueError(f"unknown crossing kind {kind!r}")
    if den == 0.0:
        raise NoCrossingError("degenerate square roots")
    a = (lam_b - lam_a) / den
    if not 0.0 < a < 1.0:
        raise NoCrossingError(f"crossing coupling {a} outside (0, 1)")
    if verify:
        m = smap.with_alpha(a)
        gap = abs(m.real_energy(lam_a, sa) - m.real_energy(lam_b, sb))
        if gap > 1e-12 * max(1.0, abs(lam_a), abs(lam_b)):
            raise NoCrossingError(f"post-check failed, curves differ by {gap:.2e}")
    return float(a)


def cross_gap_couplings(lam_left: float, lam_right: float, eps1: float, eps2: float) -> list[float]:
    """Couplings in ``[0, 1)`` equating any branch at ``lam_left <= eps1`` with any at ``lam_right >= eps2``."""
    smap = SpectralMap(eps1, eps2, 0.0)
    fl = np.sqrt(max(smap.F(lam_left), 0.0))
    fr = np.sqrt(max(smap.F(lam_right), 0.0))
    out = []
    for s in (1, -1):
        for t in (1, -1):
            den = s * fl - t * fr
            if den == 0.0:
                continue
            a = (lam_right - lam_left) / den
            if 0.0 <= a < 1.0:
                m = smap.with_alpha(a)
                if abs(m.real_energy(lam_left, s) - m.real_energy(lam_right, t)) <= 1e-9:
                    out.append(float(a))
    return out


# ---------------------------------------------------------------------------
# band thresholds and continuum entry


@dataclass(frozen=True)
class BandStructure:
    """Continuum edges ``m1 < m2`` of ``H0`` and its discrete in-gap energies."""

    m1: float
    m2: float
    discrete: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.m1 < self.m2:
            raise ValueError("need m1 < m2")
        for e in self.discrete:
            if not self.m1 < e < self.m2:
                raise ValueError(f"discrete energy {e} outside the gap")


def band_thresholds(smap: SpectralMap, bands: BandStructure) -> tuple[float, float]:
    """``(E_max, E_min)``: top of the lower and bottom of the upper continuum of ``H_alpha``."""
    ex = extrema(smap)
    e_min = float(smap.real_energy(bands.m2, -1)) if bands.m2 > ex.lambda_down else ex.E_down
    e_max = float(smap.real_energy(bands.m1, +1)) if bands.m1 < ex.lambda_up else ex.E_up
    return e_max, e_min


def bic_critical_alpha(
    smap: SpectralMap, eps_bound: float, bands: BandStructure, sign: int, tol: float = 1e-12
) -> float:
    """Coupling at which ``E^sign(eps_bound)`` reaches the nearest continuum edge.

    Levels with ``eps_bound >= eps2`` are compared with ``E_min``, levels with
    ``eps_bound <= eps1`` with ``E_max``.  The closed form assumes the edge
    is reached on its endpoint branch; otherwise the extremal branch is
    solved by bracketing.  ``smap.alpha`` is ignored.

    Raises
    ------
    NoCrossingError
        If no coupling in ``(0, 1)`` satisfies the condition.
    """
    e1, e2 = smap.eps1, smap.eps2
    eps = float(eps_bound)
    base = smap.with_alpha(0.0)
    f_eps = float(np.sqrt(max(base.F(eps), 0.0)))
    if eps >= e2:
        if not eps < bands.m2:
            raise ValueError("level must lie below the upper band edge")
        edge = bands.m2
        f_edge = float(np.sqrt(base.F(edge)))
        den = f_eps + f_edge if sign > 0 else f_edge - f_eps
        num = edge - eps
        which = 1
    elif eps <= e1:
        if not eps > bands.m1:
            raise ValueError("level must lie above the lower band edge")
        edge = bands.m1
        f_edge = float(np.sqrt(base.F(edge)))
        den = f_eps + f_edge if sign < 0 else f_edge - f_eps
        num = eps - edge
        which = 0
    else:
        raise ValueError("level must lie outside (eps1, eps2)")

    def gap(a):
        m = smap.with_alpha(a)
        return float(m.real_energy(eps, sign)) - band_thresholds(m, bands)[which]

    scale = max(1.0, abs(eps))
    if den > 0:
        a = num / den
        if 0.0 < a < 1.0 and abs(gap(a)) <= tol * scale:
            return float(a)
    # edge reached on the extremal branch: bracket on (0, 1)
    grid = np.linspace(0.0, 1.0 - 1e-9, 2001)
    vals = np.array([gap(a) for a in grid])
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    if idx.size == 0:
        raise NoCrossingError(f"level {eps} never meets the continuum for sign {sign}")
    i = int(idx[0])
    a = brentq(gap, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
    if abs(gap(a)) > tol * scale * 10:
        raise NoCrossingError(f"bracketed coupling failed post-check ({gap(a):.2e})")
    return float(a)
