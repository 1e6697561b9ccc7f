"""Acceptance criteria 1 to 11 at their stated tolerances.

Each test records a single PASS/FAIL line (shown in the terminal summary)
before asserting, so a failing criterion is still reported by number.
"""

import math
import time

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from susy_dirac.cli import RunConfig, cmd_model, cmd_spectral_map, cmd_sweep, cmd_verify
from susy_dirac.composite import (
    CompositeOperator,
    chiral_rotated_potential,
    massive_rotated_potential,
    velocity_defect,
)
from susy_dirac.darboux import gaussian_testbank, intertwining_residual, verify_factorization
from susy_dirac.dirac import Shooter, discretize
from susy_dirac.models import (
    PoschlTellerModel,
    fp_reflection,
    pt_band_spinor,
    pt_composite_levels,
    pt_golden_potential,
)
from susy_dirac.numkit import Grid, GridFunction
from susy_dirac.spectrum import (
    NoCrossingError,
    SpectralMap,
    band_thresholds,
    bic_critical_alpha,
    cross_gap_couplings,
    crossing_alpha,
    extrema,
    preimages,
    real_energy_contour,
)

SQ48, SQ76 = math.sqrt(4.8), math.sqrt(7.6)
X10 = np.linspace(-10.0, 10.0, 2001)
LATTICE_TOL, SHOOT_TOL, BOUND_TAIL = 2e-3, 1e-8, 1e-4


def lattice_level(lat, target, k):
    """Localized lattice eigenvalue nearest ``target``."""
    w, v = lat.eigenpairs(target, k=k)
    tm = lat.tail_mass(v)
    i = np.argmin(np.abs(w - target) + 10.0 * (tm > BOUND_TAIL))
    assert tm[i] < BOUND_TAIL
    return float(w[i])


def test_criterion_01_intertwining(fp, pt, rng, verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for lam in rng.choice([-1, 1], 20) * (fp.m + rng.uniform(0.01, 3.0, 20)):
        worst = max(worst, intertwining_residual(fp.transform, fp.mode(lam), lam, X10))
    x = np.linspace(-8.0, 8.0, 81)
    for nu, branch in zip(rng.uniform(0.05, 3.0, 20), rng.choice([-1, 1], 20)):
        lam = branch * math.sqrt(pt.kappa**2 + nu**2)
        worst = max(worst, intertwining_residual(pt.transform, pt_band_spinor(pt, nu, int(branch)), lam, x))
    dt = time.perf_counter() - t0
    ok = verdict(1, worst <= 1e-7 and dt < 5.0, f"residual {worst:.2e}, {dt:.2f} s")
    assert ok


def test_criterion_02_factorization(fp, pt, verdict):
    t0 = time.perf_counter()
    bank = gaussian_testbank(10)
    worst = max(verify_factorization(m.transform, m.transform.H, bank).max_residual for m in (fp, pt))
    dt = time.perf_counter() - t0
    assert verdict(2, worst <= 1e-7 and dt < 5.0, f"residual {worst:.2e}, {dt:.2f} s")


def test_criterion_03_kinetic_diagonalization(verdict):
    worst = max(velocity_defect(a) for a in (0.25, 0.5, 0.9))
    assert verdict(3, worst <= 1e-13, f"defect {worst:.2e}")


def test_criterion_04_golden_potentials(fp, pt, verdict):
    m, e, k = fp.m, fp.eps1, fp.kappa
    chiral_parts = (
        lambda x: m + 0 * x,
        e,
        lambda x: np.cosh(k * x),
        lambda x: (k * np.sinh(k * x) + m * np.cosh(k * x)) / e,
    )
    dev = {}
    dev["chiral"] = max(
        np.abs(
            CompositeOperator(fp.transform, a, ang).rotated_potential()(X10)
            - chiral_rotated_potential(*chiral_parts, a, ang)(X10)
        ).max()
        for a in (0.25, 0.5, 0.9)
        for ang in (0.0, np.pi / 2)
    )
    u2 = pt.seed.u2
    dev["massive"] = max(
        np.abs(
            pt.composite(a).rotated_potential()(X10)
            - massive_rotated_potential(pt.A, pt.m, lambda x: u2(x)[..., 0], lambda x: u2(x)[..., 1], a)(X10)
        ).max()
        for a in (0.25, 0.5, 0.9)
    )
    free = 0.0
    for a in (0.25, 0.5, 0.9):
        W = fp.composite(a).rotated_potential()
        Wx = W(X10)
        for key, f in fp.rotated_entries(a).items():
            free = max(free, np.abs(Wx[:, int(key[0]) - 1, int(key[1]) - 1] - f(X10)).max())
        far = W(np.array([-40.0, 40.0]))[:, 0, 3].real
        free = max(free, np.abs(far - np.array(fp.v14_limits(a))).max())
    vt = fp.transform.Vtilde
    free = max(free, np.abs(vt(X10)[:, 0, 1] - fp.vtilde(X10)).max())
    free = max(free, np.abs(vt(np.array([-40.0, 40.0]))[:, 0, 1].real - np.array(fp.vtilde_limits())).max())
    dev["free"] = free
    dev["poschl-teller"] = max(
        np.abs(pt.composite(a).rotated_potential()(X10) - pt_golden_potential(pt.kappa, a)(X10)).max()
        for a in (0.25, 0.5, 0.9)
    )
    worst = max(dev.values())
    detail = ", ".join(f"{name} {d:.1e}" for name, d in dev.items())
    assert verdict(4, worst <= 1e-10, detail)


def test_criterion_05_composite_spectrum(pt, verdict):
    t0 = time.perf_counter()
    op = pt.composite(0.25).rotated()
    lat = discretize(op, Grid(-40.0, 40.0, 8001))
    shooter = Shooter(op.kinetic, op.potential, -20.0, 20.0)
    levels = pt_composite_levels(pt, 0.25)
    lat_dev = shoot_dev = 0.0
    for lv in levels:
        w = lattice_level(lat, lv.energy, 12)
        E, _ = shooter.refine(w)
        lat_dev = max(lat_dev, abs(w - lv.energy))
        shoot_dev = max(shoot_dev, abs(E - lv.energy))
    dt = time.perf_counter() - t0
    energies = {lv.label: lv.energy for lv in levels}
    anchors = (
        abs(energies["E+(lam_1+)"] - 3.68012) <= 1e-5
        and abs(energies["E-(lam_1+)"] - 1.83351) <= 1e-5
        and len(levels) == 8
    )
    ok = anchors and lat_dev <= LATTICE_TOL and shoot_dev <= SHOOT_TOL and dt < 120.0
    assert verdict(5, ok, f"lattice {lat_dev:.1e}, shooting {shoot_dev:.1e}, {dt:.1f} s")


def test_criterion_06_extrema_and_contours(rng, verdict):
    ext = 0.0
    for _ in range(100):
        e1 = rng.uniform(-3.0, 3.0)
        s = SpectralMap(e1, e1 + rng.uniform(0.1, 4.0), rng.uniform(0.01, 0.95))
        ex = extrema(s)
        lo = minimize_scalar(lambda lam: s.real_energy(lam, -1), bounds=(s.eps2, ex.lambda_down + 10 * s.width + 10),
                             method="bounded", options={"xatol": 1e-12})
        hi = minimize_scalar(lambda lam: -s.real_energy(lam, 1), bounds=(ex.lambda_up - 10 * s.width - 10, s.eps1),
                             method="bounded", options={"xatol": 1e-12})
        ext = max(ext, abs(lo.fun - ex.E_down), abs(-hi.fun - ex.E_up))
    im = 0.0
    pre = 0.0
    for _ in range(10):
        e1 = rng.uniform(-3.0, 3.0)
        s = SpectralMap(e1, e1 + rng.uniform(0.1, 4.0), rng.uniform(0.05, 0.95))
        im = max(im, max(abs(s.energy(p.lam, p.sign).imag) for p in real_energy_contour(s, 512)))
        for E in np.linspace(s.delta - 10.0, s.delta + 10.0, 2001):
            hits = preimages(s, E)
            assert hits, E
            pre = max(pre, max(abs(s.energy(p.lam, p.sign) - E) for p in hits) / max(1.0, abs(E)))
    ok = ext <= 1e-10 and im <= 1e-12 and pre <= 1e-10
    assert verdict(6, ok, f"extrema {ext:.1e}, contour Im {im:.1e}, preimage {pre:.1e}")


def _sign_changes(f, alphas):
    v = np.array([f(a) for a in alphas])
    return int(np.count_nonzero(np.diff(np.sign(v)) != 0))


def test_criterion_07_level_crossings(rng, verdict):
    kinds = {("R", True): ("+-", 1, -1), ("R", False): ("--", -1, -1),
             ("L", True): ("+-", 1, -1), ("L", False): ("++", 1, 1)}
    alphas = np.linspace(1e-6, 1 - 1e-6, 400)
    found = rejected = 0
    meet = 0.0
    in_range = True
    while found < 1000:
        e1 = rng.uniform(-3.0, 3.0)
        e2 = e1 + rng.uniform(0.2, 4.0)
        off, gap = rng.uniform(0.0, 5.0), rng.uniform(0.01, 5.0)
        side = "R" if rng.random() < 0.5 else "L"
        kind, sa, sb = kinds[(side, bool(rng.random() < 0.5))]
        la, lb = (e2 + off, e2 + off + gap) if side == "R" else (e1 - off - gap, e1 - off)
        s = SpectralMap(e1, e2, 0.0)

        def diff(a):
            m = s.with_alpha(a)
            return m.real_energy(la, sa) - m.real_energy(lb, sb)

        try:
            a = crossing_alpha(la, lb, kind, e1, e2)
        except NoCrossingError:
            # independent confirmation that no crossing was missed
            assert _sign_changes(diff, alphas) == 0
            rejected += 1
            continue
        found += 1
        in_range &= 0.0 < a < 1.0
        m = s.with_alpha(a)
        Ea, Eb = m.real_energy(la, sa), m.real_energy(lb, sb)
        meet = max(meet, abs(Ea - Eb) / max(1.0, abs(Ea)))
    cross_gap = 0
    for _ in range(200):
        e1 = rng.uniform(-3.0, 3.0)
        e2 = e1 + rng.uniform(0.1, 4.0)
        ll, lr = e1 - rng.uniform(0.0, 6.0), e2 + rng.uniform(0.0, 6.0)
        cross_gap += len(cross_gap_couplings(ll, lr, e1, e2))
        s = SpectralMap(e1, e2, 0.0)
        for a in alphas[::8]:
            m = s.with_alpha(a)
            if max(m.real_energy(ll, 1), m.real_energy(ll, -1)) >= min(m.real_energy(lr, 1), m.real_energy(lr, -1)):
                cross_gap += 1
    ok = in_range and meet <= 1e-12 and cross_gap == 0
    assert verdict(7, ok, f"{found} crossings ({rejected} tuples without one), meet {meet:.1e}, cross-gap {cross_gap}")


def test_criterion_08_bic_criticals(fp, pt, verdict):
    ac = fp.alpha_crit
    formula_ok = abs(ac - math.sqrt(3 / 7)) <= 1e-14 and abs(ac - 0.654654) <= 1e-6
    lattice_ok = True
    edge = 0.0
    for a, embedded in ((ac - 0.01, False), (ac + 0.01, True)):
        lat = discretize(fp.composite(a).rotated(), Grid(-40.0, 40.0, 8001))
        w, v = lat.eigenpairs(0.25, k=30)
        tm = lat.tail_mass(v)
        pos = w > 0
        cont, loc = w[pos & (tm >= BOUND_TAIL)], w[pos & (tm < BOUND_TAIL)]
        e_min = band_thresholds(fp.spectral_map(a), fp.bands)[1]
        edge = max(edge, abs(cont.min() - e_min))
        level = loc[np.argmin(np.abs(loc - fp.transform.eps[1]))]
        lattice_ok &= abs(level - fp.transform.eps[1]) <= LATTICE_TOL
        lattice_ok &= (level > cont.min()) == embedded
    resid = 0.0
    count = 0
    smap0, bands = pt.spectral_map(0.0), pt.bands
    for lv in pt_composite_levels(pt, 0.25):
        if lv.kind != "moving":
            continue
        a = bic_critical_alpha(smap0, lv.lam, bands, lv.sign)
        count += 0.0 < a < 1.0
        m = smap0.with_alpha(a)
        thresholds = band_thresholds(m, bands)
        th = thresholds[1] if lv.lam > 0 else thresholds[0]
        resid = max(resid, abs(m.real_energy(lv.lam, lv.sign) - th))
    ok = formula_ok and lattice_ok and edge <= LATTICE_TOL and count == 6 and resid <= 1e-12
    assert verdict(8, ok, f"alpha_crit {ac:.6f}, edge {edge:.1e}, PT {count} criticals, residual {resid:.1e}")


def test_criterion_09_reflectionless(fp, verdict):
    worst = max(fp_reflection(fp, E).reflection_magnitude for E in (0.6, 1.0, 2.0))
    assert verdict(9, worst <= 1e-6, f"|r| {worst:.1e}")


def test_criterion_10_pt_spectra(pt, verdict):
    lat_dev = shoot_dev = 0.0
    cases = (
        (pt.H, (SQ48, SQ76, -SQ76)),
        (pt.Htilde, (0.0, SQ48, -SQ48, SQ76, -SQ76)),
    )
    for op, levels in cases:
        lat = discretize(op, Grid(-40.0, 40.0, 8001))
        shooter = Shooter(op.kinetic, op.potential, -20.0, 20.0)
        for E0 in levels:
            w = lattice_level(lat, E0, 6)
            E, _ = shooter.refine(w)
            lat_dev = max(lat_dev, abs(w - E0))
            shoot_dev = max(shoot_dev, abs(E - E0))
    p3 = PoschlTellerModel(1.0, 3.0)
    norms = []
    for L in (10.0, 20.0, 40.0):
        g = Grid(-L, L, int(200 * L) + 1)
        norms.append(GridFunction(g, p3.excluded_state(g.x)).norm())
    growth = min(norms[1] / norms[0], norms[2] / norms[1])
    indices_ok = p3.indices(1) == [0, 1] and p3.indices(-1) == [1]
    ok = lat_dev <= LATTICE_TOL and shoot_dev <= SHOOT_TOL and growth >= 10.0 and indices_ok
    assert verdict(10, ok, f"lattice {lat_dev:.1e}, shooting {shoot_dev:.1e}, excluded-state growth {growth:.1e}")


@pytest.mark.xfail(strict=True, reason="the threshold state at integer kappa tends to a constant; its norm grows like sqrt(L)")
def test_criterion_10_threshold_state_growth(verdict):
    p3 = PoschlTellerModel(1.0, 3.0)
    growth = np.inf
    for sign in (1, -1):
        state = p3.top_state(sign)
        norms = []
        for L in (10.0, 20.0, 40.0):
            g = Grid(-L, L, int(200 * L) + 1)
            norms.append(GridFunction(g, state(g.x)).norm())
        growth = min(growth, norms[1] / norms[0], norms[2] / norms[1])
    assert verdict("10 (threshold state, known gap)", growth >= 10.0, f"growth {growth:.2f}")


def test_criterion_11_determinism(verdict):
    runs = []
    for _ in range(2):
        report, passed = cmd_verify(RunConfig(scale="quick"))
        runs.append((
            report,
            passed,
            cmd_spectral_map(RunConfig(model="custom-seeds", alpha=0.5)),
            cmd_spectral_map(RunConfig(model="custom-seeds", alpha=0.5, fmt="json")),
            cmd_model(RunConfig(model="free-particle", alpha=0.5)),
            cmd_model(RunConfig(model="poschl-teller", alpha=0.25)),
            cmd_sweep(RunConfig(model="poschl-teller", sweep=(0.0, 0.99, 12))),
        ))
    identical = runs[0] == runs[1]
    assert verdict(11, identical and runs[0][1], f"identical {identical}, verify passed {runs[0][1]}")
