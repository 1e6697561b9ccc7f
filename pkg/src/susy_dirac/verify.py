"""Aggregated identity and spectrum checks.

Each check measures one residual against a fixed tolerance.  Checks are
grouped by module so a subset can be run with ``only=``.  The ``"full"``
scale adds the lattice diagonalizations, shooting refinements and
transfer-matrix scattering; ``"quick"`` keeps the closed-form identities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from . import composite as cp
from . import darboux as db
from . import spectrum as sp
from .dirac import Shooter, discretize
from .models import (
    FreeParticleModel,
    PoschlTellerModel,
    fp_reflection,
    pt_band_spinor,
    pt_bound_states,
    pt_composite_levels,
    pt_golden_potential,
    pt_scattering_energy,
)
from .numkit import Grid, GridFunction

MODULES = ("darboux", "composite", "spectrum", "models", "dirac")
SCALES = ("quick", "full")


@dataclass(frozen=True)
class Check:
    """Outcome of one check; ``passed`` iff ``residual <= tolerance``."""

    name: str
    module: str
    anchor: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "module": self.module,
            "anchor": self.anchor,
            "residual": float(self.residual),
            "tolerance": float(self.tolerance),
            "passed": self.passed,
        }


@dataclass
class ValidationReport:
    """Ordered collection of checks; passes iff every check passes."""

    checks: list[Check] = field(default_factory=list)
    scale: str = "quick"
    fault: bool = False

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "scale": self.scale,
            "fault_injected": self.fault,
            "passed": self.passed,
            "n_checks": len(self.checks),
            "n_failed": len(self.failures),
            "checks": [c.to_dict() for c in self.checks],
        }


@dataclass(frozen=True)
class _Spec:
    module: str
    name: str
    anchor: str
    tolerance: float
    func: Callable[["_Context"], float]
    scale: str = "quick"


@dataclass
class _Context:
    rotation_sign: float = 1.0
    _cache: dict = field(default_factory=dict)

    def get(self, key, factory):
        if key not in self._cache:
            self._cache[key] = factory()
        return self._cache[key]

    @property
    def fp(self) -> FreeParticleModel:
        return self.get("fp", FreeParticleModel)

    @property
    def pt(self) -> PoschlTellerModel:
        return self.get("pt", PoschlTellerModel)


_REGISTRY: list[_Spec] = []


def _check(module: str, name: str, anchor: str, tolerance: float, scale: str = "quick"):
    def deco(func):
        _REGISTRY.append(_Spec(module, name, anchor, tolerance, func, scale))
        return func

    return deco


_X = np.linspace(-10.0, 10.0, 2001)


# ---------------------------------------------------------------------------
# darboux


@_check("darboux", "intertwining_free_particle", "intertwining relation L H = H~ L, free particle", 1e-7)
def _intertwining_fp(ctx: _Context) -> float:
    fp = ctx.fp
    rng = np.random.default_rng(1)
    x = np.linspace(-8, 8, 401)
    worst = 0.0
    for _ in range(20):
        lam = rng.choice([-1.0, 1.0]) * rng.uniform(fp.m * 1.01, 4.0)
        worst = max(worst, db.intertwining_residual(fp.transform, fp.mode(lam), lam, x))
    return worst


@_check("darboux", "intertwining_poschl_teller", "intertwining relation L H = H~ L, Poschl-Teller", 1e-7)
def _intertwining_pt(ctx: _Context) -> float:
    pt = ctx.pt
    rng = np.random.default_rng(2)
    x = np.linspace(-8, 8, 81)
    worst = 0.0
    for _ in range(20):
        nu = rng.uniform(0.2, 5.0)
        branch = int(rng.choice([-1, 1]))
        lam = pt_scattering_energy(pt, nu, branch)
        worst = max(worst, db.intertwining_residual(pt.transform, pt_band_spinor(pt, nu, branch), lam, x))
    return worst


def _factorization(model) -> float:
    return db.verify_factorization(model.transform, model.H, db.gaussian_testbank(10)).max_residual


@_check("darboux", "factorization_free_particle", "L^dag L and L L^dag as quadratic polynomials, free particle", 1e-7)
def _fact_fp(ctx: _Context) -> float:
    return _factorization(ctx.fp)


@_check("darboux", "factorization_poschl_teller", "L^dag L and L L^dag as quadratic polynomials, Poschl-Teller", 1e-7)
def _fact_pt(ctx: _Context) -> float:
    return _factorization(ctx.pt)


@_check("darboux", "missing_states", "missing states: eigenstates of H~ annihilated by L^dag", 1e-9)
def _missing(ctx: _Context) -> float:
    worst = 0.0
    x = np.linspace(-8, 8, 801)
    for model in (ctx.fp, ctx.pt):
        t = model.transform
        for i in (0, 1):
            j = t.missing_jet(i)
            v = j.value(x)
            scale = np.abs(v).max()
            r1 = np.abs(db.apply_first_order(t.Htilde, j, x) - t.eps[i] * v).max() / scale
            r2 = np.abs(db.intertwine_adjoint(t, j).value(x)).max() / scale
            worst = max(worst, r1, r2)
    return worst


@_check("darboux", "chiral_closed_forms", "chiral scenarios: closed-form intertwiner and partner potential", 1e-10)
def _chiral(ctx: _Context) -> float:
    fp, pt = ctx.fp, ctx.pt
    c1 = db.chiral_case1(lambda x: fp.m + 0 * x, fp.eps1, fp.u11, fp.u12)
    t = fp.transform
    r = max(np.abs(c1.Vtilde(_X) - t.Vtilde(_X)).max(), np.abs(c1.coefficient(_X) - t.L_coefficient(_X)).max())
    s = pt.seed
    c2 = db.chiral_case2(pt.A, pt.m, lambda x: s.u2(x)[..., 0], lambda x: s.u2(x)[..., 1])
    tp = pt.transform
    r2 = max(np.abs(c2.Vtilde(_X) - tp.Vtilde(_X)).max(), np.abs(c2.coefficient(_X) - tp.L_coefficient(_X)).max())
    return float(max(r, r2))


# ---------------------------------------------------------------------------
# composite


@_check("composite", "kinetic_diagonalization", "rotation diagonalizes the kinetic symbol to velocities 1 +- alpha", 1e-13)
def _kinetic(ctx: _Context) -> float:
    return max(cp.velocity_defect(a, sign=ctx.rotation_sign) for a in (0.25, 0.5, 0.9))


@_check("composite", "rotation_unitarity", "rotation matrix is unitary", 1e-14)
def _unitary(ctx: _Context) -> float:
    R = cp.rotation_matrix(np.pi / 2, ctx.rotation_sign)
    return float(np.abs(R.conj().T @ R - np.eye(4)).max())


@_check("composite", "superalgebra", "H0 commutes with L1 and {L1, L1} = 2 (H0 - e1)(H0 - e2)", 1e-9)
def _superalgebra(ctx: _Context) -> float:
    bank = db.gaussian_testbank(10, seed=3)
    x = np.linspace(-8, 8, 401)
    fs = []
    for a, b in zip(bank[::2], bank[1::2]):
        fs.append(tuple(np.concatenate(p, axis=-1) for p in zip(a(x), b(x))))
    worst = 0.0
    for model in (ctx.fp, ctx.pt):
        worst = max(worst, *cp.superalgebra_residuals(model.transform, fs, x).values())
    return worst


@_check("composite", "grading", "Gamma grading: H0 even, L1 odd", 1e-14)
def _grading(ctx: _Context) -> float:
    return max(max(cp.grading_defects(m.transform, _X).values()) for m in (ctx.fp, ctx.pt))


@_check("composite", "chiral_rotated_potential", "rotated chiral composite potential, both rotation angles", 1e-10)
def _golden_chiral(ctx: _Context) -> float:
    fp = ctx.fp
    worst = 0.0
    for ang in (0.0, np.pi / 2):
        for a in (0.25, 0.5, 0.9):
            W = cp.CompositeOperator(fp.transform, a, ang).rotated_potential()(_X)
            ref = cp.chiral_rotated_potential(lambda x: fp.m + 0 * x, fp.eps1, fp.u11, fp.u12, a, ang)(_X)
            worst = max(worst, float(np.abs(W - ref).max()))
    return worst


@_check("composite", "massive_rotated_potential", "rotated composite potential, massive scenario", 1e-10)
def _golden_massive(ctx: _Context) -> float:
    pt = ctx.pt
    s = pt.seed
    worst = 0.0
    for a in (0.25, 0.5, 0.9):
        W = pt.composite(a).rotated_potential()(_X)
        ref = cp.massive_rotated_potential(pt.A, pt.m, lambda x: s.u2(x)[..., 0], lambda x: s.u2(x)[..., 1], a)(_X)
        worst = max(worst, float(np.abs(W - ref).max()))
    return worst


@_check("composite", "composite_eigenstates", "bispinors of bound and missing states solve H_alpha", 1e-8)
def _bispinors(ctx: _Context) -> float:
    pt = ctx.pt
    c = pt.composite(0.25)
    x = np.linspace(-6, 6, 241)
    worst = 0.0
    for b in pt_bound_states(pt).original:
        for s in (1, -1):
            psi = cp.eigen_bispinor(c, b.spinor, b.energy, s)
            worst = max(worst, cp.bispinor_residual(c, psi, cp.composite_energy(c, b.energy, s), x))
    for i in (0, 1):
        worst = max(worst, cp.bispinor_residual(c, cp.missing_bispinor(c, i), c.eps[i], x))
    return worst


# ---------------------------------------------------------------------------
# spectrum


@_check("spectrum", "extrema", "numerically minimized E- and maximized E+ against the closed-form extrema", 1e-10)
def _extrema(ctx: _Context) -> float:
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(100):
        e1 = rng.uniform(-3, 2)
        e2 = e1 + rng.uniform(0.1, 4)
        a = rng.uniform(0.05, 0.95)
        smap = sp.SpectralMap(e1, e2, a)
        w = e2 - e1
        hi = 100 * w / (1 - a)
        lo = minimize_scalar(lambda l: smap.real_energy(l, -1), bounds=(e2, e2 + hi), method="bounded",
                             options={"xatol": 1e-12})
        up = minimize_scalar(lambda l: -smap.real_energy(l, 1), bounds=(e1 - hi, e1), method="bounded",
                             options={"xatol": 1e-12})
        ex = sp.extrema(smap)
        worst = max(worst, abs(lo.fun - ex.E_down), abs(-up.fun - ex.E_up))
    return worst


@_check("spectrum", "contour_reality", "energies on the elliptic contour are real", 1e-12)
def _contour(ctx: _Context) -> float:
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(20):
        e1 = rng.uniform(-3, 2)
        smap = sp.SpectralMap(e1, e1 + rng.uniform(0.1, 4), rng.uniform(0.05, 0.95))
        for p in sp.real_energy_contour(smap, 256):
            worst = max(worst, abs(complex(smap.energy(p.lam, p.sign)).imag), sp.ellipse_residual(smap, p.lam))
    return worst


@_check("spectrum", "energy_coverage", "real axis and contour cover every real energy", 1e-10)
def _coverage(ctx: _Context) -> float:
    smap = sp.SpectralMap(-2.0, 2.0, 0.5)
    worst = 0.0
    for E in np.linspace(-8, 8, 1601):
        pre = [p for p in sp.preimages(smap, E) if p.location != "cut"]
        if not pre:
            return math.inf
        worst = max(worst, min(abs(complex(smap.energy(p.lam, p.sign)) - E) for p in pre))
    return worst


@_check("spectrum", "level_crossings", "crossing couplings lie in (0, 1) on curve intersections", 1e-12)
def _crossings(ctx: _Context) -> float:
    rng = np.random.default_rng(6)
    worst = 0.0
    for i in range(1000):
        e1 = rng.uniform(-3, 2)
        e2 = e1 + rng.uniform(0.1, 4)
        kind, side = (("+-", 1), ("--", 1), ("++", -1), ("+-", -1))[i % 4]
        d = np.sort(rng.uniform(0.0, 6.0, 2))
        if d[0] == d[1]:
            continue
        la, lb = (e2 + d[0], e2 + d[1]) if side > 0 else (e1 - d[1], e1 - d[0])
        try:
            a = sp.crossing_alpha(la, lb, kind, e1, e2, verify=False)
        except sp.NoCrossingError:
            return math.inf
        m = sp.SpectralMap(e1, e2, a)
        sa, sb = {"+-": (1, -1), "--": (-1, -1), "++": (1, 1)}[kind]
        gap = abs(m.real_energy(la, sa) - m.real_energy(lb, sb)) / max(1.0, abs(la), abs(lb))
        worst = max(worst, gap)
        if sp.cross_gap_couplings(e1 - d[0], e2 + d[1], e1, e2):
            return math.inf
    return worst


@_check("spectrum", "bic_free_particle", "free-particle critical coupling sqrt((m - e)/(m + e))", 1e-12)
def _bic_fp(ctx: _Context) -> float:
    fp = ctx.fp
    a = sp.bic_critical_alpha(fp.spectral_map(0.0), fp.eps1, fp.bands, -1)
    return abs(a - math.sqrt(3.0 / 7.0)) if (fp.m, fp.eps1) == (0.5, 0.2) else abs(a - fp.alpha_crit)


@_check("spectrum", "bic_poschl_teller", "six movable levels meet the continuum edge", 1e-12)
def _bic_pt(ctx: _Context) -> float:
    pt = ctx.pt
    smap = pt.spectral_map(0.0)
    worst = 0.0
    for lam in (pt.level(0, 1), pt.level(1, 1), pt.level(1, -1)):
        for s in (1, -1):
            a = sp.bic_critical_alpha(smap, lam, pt.bands, s)
            if not 0 < a < 1:
                return math.inf
            m = smap.with_alpha(a)
            e_max, e_min = sp.band_thresholds(m, pt.bands)
            edge = e_min if lam >= smap.eps2 else e_max
            worst = max(worst, abs(float(m.real_energy(lam, s)) - edge) / max(1.0, abs(lam)))
    return worst


# ---------------------------------------------------------------------------
# models


@_check("models", "free_particle_potential", "free-particle partner potential and its limits", 1e-10)
def _fp_potential(ctx: _Context) -> float:
    fp = ctx.fp
    t = fp.transform
    r = np.abs(t.Vtilde(_X)[:, 0, 1] - fp.vtilde(_X)).max()
    r = max(r, np.abs(t.L_coefficient(_X) - fp.L_coefficient(_X)).max())
    ends = t.Vtilde(np.array([-40.0, 40.0]))[:, 0, 1].real
    return float(max(r, *np.abs(ends - np.array(fp.vtilde_limits()))))


@_check("models", "free_particle_rotated_entries", "free-particle rotated composite entries and limits", 1e-10)
def _fp_entries(ctx: _Context) -> float:
    fp = ctx.fp
    worst = 0.0
    for a in (0.25, 0.5, 0.9):
        W = fp.composite(a).rotated_potential()
        Wx = W(_X)
        for key, f in fp.rotated_entries(a).items():
            i, j = int(key[0]) - 1, int(key[1]) - 1
            worst = max(worst, np.abs(Wx[:, i, j] - f(_X)).max(), np.abs(Wx[:, j, i] - f(_X)).max())
        ends = W(np.array([-40.0, 40.0]))[:, 0, 3].real
        worst = max(worst, *np.abs(ends - np.array(fp.v14_limits(a))))
    return float(worst)


@_check("models", "poschl_teller_rotated_potential", "Poschl-Teller rotated composite potential at U0 = 1", 1e-10)
def _pt_golden(ctx: _Context) -> float:
    pt = ctx.pt
    worst = 0.0
    for a in (0.25, 0.5, 0.9):
        W = pt.composite(a).rotated_potential()(_X)
        worst = max(worst, float(np.abs(W - pt_golden_potential(pt.kappa, a)(_X)).max()))
    return worst


@_check("models", "poschl_teller_shape_invariance", "partner potential is A_{kappa+1} sigma_1", 1e-12)
def _pt_shape(ctx: _Context) -> float:
    pt = ctx.pt
    Vt = pt.transform.Vtilde(_X)
    off = np.abs(Vt[:, 0, 1] - pt.A(_X, pt.kappa + 1)).max()
    diag = np.abs(Vt[:, 0, 0]).max() + np.abs(Vt[:, 1, 1]).max()
    return float(max(off, diag))


@_check("models", "poschl_teller_bound_states", "bound states solve H with unit norm", 1e-9)
def _pt_bound(ctx: _Context) -> float:
    pt = ctx.pt
    x = np.linspace(-10, 10, 801)
    g = Grid(-25, 25, 10001)
    worst = 0.0
    for b in pt_bound_states(pt).original:
        worst = max(worst, db.seed_residual(pt.H, b.energy, b.spinor.value, b.spinor.d1, x))
        worst = max(worst, abs(GridFunction(g, b.spinor.value(g.x)).norm() - 1.0))
    return worst


@_check("models", "excluded_state_divergence", "excluded formal solution at integer kappa is not normalizable", 1e-12)
def _excluded(ctx: _Context) -> float:
    p3 = PoschlTellerModel(1.0, 3.0)
    norms = []
    for L in (10.0, 20.0):
        g = Grid(-L, L, int(200 * L) + 1)
        norms.append(GridFunction(g, p3.excluded_state(g.x)).norm())
    # residual is zero when the truncated norm grows at least tenfold
    return max(0.0, 10.0 - norms[1] / norms[0])


@_check("models", "reflectionless_partner", "free-particle partner is reflectionless", 1e-6, scale="full")
def _reflectionless(ctx: _Context) -> float:
    return max(fp_reflection(ctx.fp, E).reflection_magnitude for E in (0.6, 1.0, 2.0))


# ---------------------------------------------------------------------------
# lattice and shooting


def _lattice_match(lat, shooter, energies):
    lat_err = shoot_err = 0.0
    for E0 in energies:
        w, v = lat.eigenpairs(E0, k=12)
        tm = lat.tail_mass(v)
        i = int(np.argmin(np.abs(w - E0) + (tm > 1e-4) * 10))
        lat_err = max(lat_err, abs(w[i] - E0))
        E, _ = shooter.refine(float(w[i]))
        shoot_err = max(shoot_err, abs(E - E0))
    return lat_err, shoot_err


def _pt_spectra(ctx: _Context):
    pt = ctx.pt
    out = []
    for op, levels in (
        (pt.H, [b.energy for b in pt_bound_states(pt).original]),
        (pt.Htilde, [0.0] + [pt.tilde_level(n, s) for s in (1, -1) for n in range(pt.n_top + 1)]),
    ):
        lat = discretize(op, Grid(-40, 40, 8001))
        out.append(_lattice_match(lat, Shooter(op.kinetic, op.potential, -20, 20), levels))
    return out


@_check("dirac", "pt_lattice_levels", "lattice spectra of H and H~ at kappa = 2.9", 2e-3, scale="full")
def _pt_lattice(ctx: _Context) -> float:
    return max(r[0] for r in ctx.get("pt_spectra", lambda: _pt_spectra(ctx)))


@_check("dirac", "pt_shooting_levels", "shooting refinement of H and H~ levels", 1e-8, scale="full")
def _pt_shooting(ctx: _Context) -> float:
    return max(r[1] for r in ctx.get("pt_spectra", lambda: _pt_spectra(ctx)))


def _composite_spectra(ctx: _Context):
    pt = ctx.pt
    op = pt.composite(0.25).rotated()
    lat = discretize(op, Grid(-40, 40, 8001))
    return _lattice_match(lat, Shooter(op.kinetic, op.potential, -20, 20),
                          [lv.energy for lv in pt_composite_levels(pt, 0.25)])


@_check("dirac", "composite_lattice_levels", "lattice spectrum of the composite reproduces the spectral map", 2e-3,
        scale="full")
def _comp_lattice(ctx: _Context) -> float:
    return ctx.get("comp", lambda: _composite_spectra(ctx))[0]


@_check("dirac", "composite_shooting_levels", "shooting refinement of composite levels", 1e-8, scale="full")
def _comp_shooting(ctx: _Context) -> float:
    return ctx.get("comp", lambda: _composite_spectra(ctx))[1]


def lowest_continuum_level(lat, center: float, k: int = 30, threshold: float = 1e-4) -> float:
    """Smallest positive delocalized lattice eigenvalue near ``center``."""
    w, v = lat.eigenpairs(center, k)
    tm = lat.tail_mass(v)
    cont = w[(w > 0) & (tm >= threshold)]
    return float(cont.min()) if cont.size else math.nan


@_check("dirac", "free_particle_band_edge", "band edge passes the bound level at the critical coupling", 2e-3,
        scale="full")
def _fp_edge(ctx: _Context) -> float:
    fp = ctx.fp
    ac = fp.alpha_crit
    worst = 0.0
    for a, side in ((ac - 0.01, 1), (ac + 0.01, -1)):
        lat = discretize(fp.composite(a).rotated(), Grid(-40, 40, 8001))
        edge = lowest_continuum_level(lat, fp.eps1 + 0.05)
        e_min = sp.band_thresholds(fp.spectral_map(a), fp.bands)[1]
        if not side * (edge - fp.eps1) > 0:
            return math.inf
        worst = max(worst, abs(edge - e_min))
    return worst


# ---------------------------------------------------------------------------
# driver


def registered_checks(scale: str = "full") -> list[tuple[str, str, str]]:
    """``(module, name, scale)`` of every check enabled at ``scale``."""
    return [(s.module, s.name, s.scale) for s in _REGISTRY if scale == "full" or s.scale == "quick"]


def run_checks(only: str | None = None, scale: str = "quick", fault: bool = False) -> ValidationReport:
    """Run the registered checks.

    Parameters
    ----------
    only : str, optional
        Restrict to one module name from :data:`MODULES`.
    scale : {"quick", "full"}
        ``"full"`` adds lattice, shooting and scattering checks.
    fault : bool
        Flip the sign of the last row of the rotation matrix, which must make
        the kinetic-diagonalization check fail.
    """
    if only is not None and only not in MODULES:
        raise ValueError(f"unknown module {only!r}; choose from {', '.join(MODULES)}")
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}")
    ctx = _Context(rotation_sign=-1.0 if fault else 1.0)
    report = ValidationReport(scale=scale, fault=fault)
    for spec in _REGISTRY:
        if only is not None and spec.module != only:
            continue
        if scale == "quick" and spec.scale == "full":
            continue
        try:
            r = float(spec.func(ctx))
        except Exception:  # noqa: BLE001 - a crashing check is a failing check
            r = math.inf
        report.checks.append(Check(spec.name, spec.module, spec.anchor, r, spec.tolerance))
    return report
