import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from susy_dirac.darboux import (
    SeedError,
    SeedPair,
    SingularTransformError,
    SpinorFunction,
    apply_first_order,
    build_transform,
    chiral_case1,
    chiral_case2,
    chirality_defect,
    gaussian_testbank,
    intertwine,
    intertwine_adjoint,
    intertwining_residual,
    verify_factorization,
)
from susy_dirac.dirac import SIGMA3, DiracOperator, MatrixField, vector_stack
from susy_dirac.models import FreeParticleModel, pt_band_spinor


def free_seed_transform(m, e, odd=False):
    k = math.sqrt(m * m - e * e)
    H = FreeParticleModel(m, e).H
    c, s = (np.sinh, np.cosh) if odd else (np.cosh, np.sinh)
    u = lambda x: vector_stack(x, [c(k * x), (k * s(k * x) + m * c(k * x)) / e])
    return H, SeedPair(-e, e, lambda x: u(x) @ SIGMA3, u)


# potential and coefficient closed forms


def test_free_partner_potential(fp, xs):
    m, e, k = fp.m, fp.eps1, fp.kappa
    H, seed = free_seed_transform(m, e)
    t = build_transform(H, seed)
    vt = t.Vtilde(xs)
    ref = e * e / (m + k * np.tanh(k * xs)) + k * np.tanh(k * xs)
    assert np.abs(vt[:, 0, 1] - ref).max() <= 1e-10
    assert np.abs(vt[:, 0, 0]).max() <= 1e-10 and np.abs(vt[:, 1, 1]).max() <= 1e-10
    assert vt[1000, 0, 1].real == pytest.approx(0.08, abs=1e-12)
    far = t.Vtilde(np.array([-40.0, 40.0]))[:, 0, 1].real
    np.testing.assert_allclose(far, [m, m], atol=1e-10)


def test_pt_shape_invariance(pt, xs):
    vt = pt.transform.Vtilde(xs)
    A_next = (pt.kappa) * np.tanh(xs)
    assert np.abs(vt[:, 0, 1] - A_next).max() <= 1e-10
    assert np.abs(vt[:, 1, 0] - A_next).max() <= 1e-10
    assert np.abs(vt[:, 0, 0]).max() <= 1e-10 and np.abs(vt[:, 1, 1]).max() <= 1e-10


def test_constant_seeds_are_a_fixed_point(xs):
    m = 0.5
    H = FreeParticleModel(m, 0.2).H
    u1 = lambda x: vector_stack(x, [np.ones_like(x), -np.ones_like(x)])
    u2 = lambda x: vector_stack(x, [np.ones_like(x), np.ones_like(x)])
    t = build_transform(H, SeedPair(-m, m, u1, u2))
    assert np.abs(t.A(xs)).max() <= 1e-15
    assert np.abs(t.Vtilde(xs) - H.potential(xs)).max() <= 1e-15


def test_free_intertwiner_coefficient(fp, xs):
    m, e, k = fp.m, fp.eps1, fp.kappa
    th = np.tanh(k * xs)
    ref = np.zeros((xs.size, 2, 2))
    ref[:, 0, 0] = -k * th
    ref[:, 1, 1] = -m + e * e / (m + k * th)
    assert np.abs(fp.transform.L_coefficient(xs) - ref).max() <= 1e-10


def test_seed_validation():
    H, seed = free_seed_transform(0.5, 0.2)
    bad = SeedPair(-0.2, 0.3, seed.u1, seed.u2)
    with pytest.raises(SeedError):
        build_transform(H, bad)
    with pytest.raises(ValueError):
        SeedPair(0.3, 0.2, seed.u1, seed.u2)


def test_singular_seed_rejected():
    H, seed = free_seed_transform(0.5, 0.2, odd=True)
    with pytest.raises(SingularTransformError):
        build_transform(H, seed)


# intertwiner kernel and intertwining


def test_intertwiner_kills_seeds(fp, pt, xs):
    for model in (fp, pt):
        t = model.transform
        for eps, u in zip(t.eps, (t.seed.u1, t.seed.u2)):
            jet = SpinorFunction.from_equation(t.H, eps, u)
            Lu = intertwine(t, jet).value(xs)
            assert np.abs(Lu).max() <= 1e-9 * max(1.0, np.abs(u(xs)).max())


def test_kernel_is_exactly_the_seed_span(fp, xs):
    # the second solution at eps1 is not annihilated
    t = fp.transform
    m, e, k = fp.m, fp.eps1, fp.kappa
    other = lambda x: vector_stack(x, [np.sinh(k * x), (k * np.cosh(k * x) + m * np.sinh(k * x)) / e]) @ SIGMA3
    jet = SpinorFunction.from_equation(t.H, -e, other)
    assert np.abs(jet.value(xs)).max() > 0
    assert np.abs(intertwine(t, jet).value(xs)).max() > 1e-2


def test_free_plane_wave_intertwining(fp, xs):
    assert intertwining_residual(fp.transform, fp.mode(0.7), 0.7, xs) <= 1e-8


@pytest.mark.parametrize("lam", [-2.3, -0.6, 0.55, 1.9])
def test_free_mode_intertwining(fp, xs, lam):
    assert intertwining_residual(fp.transform, fp.mode(lam), lam, xs) <= 1e-7


@pytest.mark.parametrize("nu,branch", [(0.4, 1), (1.4, -1), (3.0, 1)])
def test_pt_band_intertwining(pt, nu, branch):
    x = np.linspace(-8, 8, 81)
    lam = branch * math.sqrt(pt.kappa**2 + nu**2)
    assert intertwining_residual(pt.transform, pt_band_spinor(pt, nu, branch), lam, x) <= 1e-7


def test_pt_partner_state_collinear(pt, xs):
    psi = pt.bound_spinor(1, 1)
    a = intertwine(pt.transform, psi).value(xs).ravel()
    b = pt.tilde_closed_form(1, 1, xs).ravel()
    assert 1 - abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b)) <= 1e-8


# factorization and missing states


@pytest.mark.parametrize("which", ["fp", "pt"])
def test_factorization_on_gaussians(fp, pt, which):
    t = (fp if which == "fp" else pt).transform
    rep = verify_factorization(t, t.H, gaussian_testbank(10))
    assert rep.passed and rep.max_residual <= 1e-7


def test_missing_states_are_eigenstates(fp, pt, xs):
    for model in (fp, pt):
        t = model.transform
        for idx in (0, 1):
            jet = t.missing_jet(idx)
            r = apply_first_order(t.Htilde, jet, xs) - t.eps[idx] * jet.value(xs)
            assert np.abs(r).max() <= 1e-9 * max(1.0, np.abs(jet.value(xs)).max())


def test_adjoint_annihilates_missing_states(fp, xs):
    t = fp.transform
    for idx in (0, 1):
        assert np.abs(intertwine_adjoint(t, t.missing_jet(idx)).value(xs)).max() <= 1e-9


def test_free_missing_states_related_by_sigma3(fp, xs):
    t = fp.transform
    a, b = t.missing1(xs), t.missing2(xs)
    r = b / np.abs(b).max() - (a @ SIGMA3) / np.abs(a).max()
    r2 = b / np.abs(b).max() + (a @ SIGMA3) / np.abs(a).max()
    assert min(np.abs(r).max(), np.abs(r2).max()) <= 1e-12


# chiral scenarios


def test_case1_matches_engine(fp, rng):
    m, e, k = fp.m, fp.eps1, fp.kappa
    c1 = chiral_case1(
        lambda x: m + 0 * x,
        e,
        lambda x: np.cosh(k * x),
        lambda x: (k * np.sinh(k * x) + m * np.cosh(k * x)) / e,
    )
    x = rng.uniform(-10, 10, 200)
    t = fp.transform
    assert np.abs(c1.coefficient(x) - t.L_coefficient(x)).max() <= 1e-10
    assert np.abs(c1.Vtilde(x) - t.Vtilde(x)).max() <= 1e-10


def test_case1_decoupled_limit(xs):
    v1 = lambda x: 0.3 + 0.1 * np.tanh(x)
    c1 = chiral_case1(v1, 0.0, lambda x: 1 + 0 * x, lambda x: 2 + 0 * x)
    C = c1.coefficient(xs)
    np.testing.assert_allclose(C[:, 0, 0], v1(xs), atol=1e-15)
    np.testing.assert_allclose(C[:, 1, 1], -v1(xs), atol=1e-15)
    np.testing.assert_allclose(c1.Vtilde(xs)[:, 0, 1], -v1(xs), atol=1e-15)


def test_case1_node_rejected():
    with pytest.raises(SingularTransformError):
        chiral_case1(lambda x: 0 * x + 0.5, 0.2, np.sinh, np.cosh)


def test_case2_matches_engine_and_closed_form(pt, rng):
    s = math.sqrt(2 * pt.kappa - 1)
    u2 = pt.seed.u2
    c2 = chiral_case2(pt.A, pt.m, lambda x: u2(x)[..., 0], lambda x: u2(x)[..., 1])
    x = rng.uniform(-10, 10, 200)
    t = pt.transform
    assert np.abs(c2.coefficient(x) - t.L_coefficient(x)).max() <= 1e-10
    assert np.abs(c2.Vtilde(x) - t.Vtilde(x)).max() <= 1e-10
    ref = np.zeros((x.size, 2, 2))
    ref[:, 0, 0] = -pt.A(x, pt.kappa + 1)
    ref[:, 1, 0] = -pt.U0 * s
    ref[:, 1, 1] = -pt.A(x)
    assert np.abs(c2.coefficient(x) - ref).max() <= 1e-10


def test_case2_massless_is_diagonal(xs):
    c2 = chiral_case2(np.tanh, 0.0, lambda x: 1 + 0 * x, np.sinh)
    C = c2.coefficient(xs)
    assert np.abs(C[:, 0, 1]).max() == 0 and np.abs(C[:, 1, 0]).max() == 0


def test_partners_are_chiral(fp, pt, xs):
    bank = gaussian_testbank(6, seed=3)
    for model in (fp, pt):
        assert chirality_defect(model.transform.Htilde, bank, xs) <= 1e-10


def test_massive_operator_is_not_chiral(pt, xs):
    assert chirality_defect(pt.H, gaussian_testbank(3), xs) > 1e-3


@settings(max_examples=25, deadline=None)
@given(m=st.floats(0.2, 2.0), ratio=st.floats(0.05, 0.95))
def test_free_partner_hermitian_and_bounded(m, ratio):
    fpm = FreeParticleModel(m, ratio * m)
    x = np.linspace(-15, 15, 301)
    vt = fpm.transform.Vtilde
    assert vt.hermiticity_defect(x) <= 1e-12 * max(1.0, m)
    assert np.abs(vt(x)).max() <= 2 * m + 1e-12


def test_operator_with_other_velocity_rejected():
    H = DiracOperator(MatrixField.constant(np.diag([0.5, -0.5])), (2.0,))
    _, seed = free_seed_transform(0.5, 0.2)
    with pytest.raises(ValueError):
        build_transform(H, seed)
