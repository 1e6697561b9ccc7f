import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from susy_dirac.composite import (
    GAMMA,
    CompositeOperator,
    bispinor_residual,
    chiral_rotated_potential,
    composite_energy,
    derivative_bispinor,
    eigen_bispinor,
    grading_defects,
    massive_rotated_potential,
    missing_bispinor,
    rotation_matrix,
    superalgebra_residuals,
    velocity_defect,
)
from susy_dirac.darboux import gaussian_testbank
from susy_dirac.dirac import J
from susy_dirac.models import pt_golden_potential
from susy_dirac.spectrum import extrema
from susy_dirac.numkit import trapezoid


def fp_parts(fp):
    m, e, k = fp.m, fp.eps1, fp.kappa
    return (
        lambda x: m + 0 * x,
        e,
        lambda x: np.cosh(k * x),
        lambda x: (k * np.sinh(k * x) + m * np.cosh(k * x)) / e,
    )


def bispinor_bank(n=4, seed=7):
    a = gaussian_testbank(2 * n, seed=seed)
    out = []
    for f, g in zip(a[::2], a[1::2]):
        out.append(
            (
                lambda x, f=f, g=g: np.concatenate([f.value(x), g.value(x)], -1),
                lambda x, f=f, g=g: np.concatenate([f.d1(x), g.d1(x)], -1),
                lambda x, f=f, g=g: np.concatenate([f.d2(x), g.d2(x)], -1),
            )
        )
    return out


# rotation


@pytest.mark.parametrize("angle", [0.0, 0.7, np.pi / 2])
def test_rotation_unitary(angle):
    R = rotation_matrix(angle)
    assert np.abs(R.conj().T @ R - np.eye(4)).max() <= 1e-14


def test_rotation_at_zero_angle_is_bare_sign_matrix():
    R = rotation_matrix(0.0)
    M = R * (2 * math.sqrt(2)) / (1 - 1j)
    np.testing.assert_allclose(M, np.round(M.real), atol=1e-14)
    assert set(np.unique(np.round(M.real))) == {-1.0, 1.0}


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.9])
def test_kinetic_diagonalization(alpha):
    assert velocity_defect(alpha) <= 1e-13


def test_flipped_rotation_breaks_diagonalization():
    assert velocity_defect(0.5, sign=-1) > 0.1


def test_rotated_operator_velocities(fp):
    op = fp.composite(0.3).rotated()
    assert op.velocities == (1.3, 0.7)
    np.testing.assert_allclose(op.kinetic[:2, :2], 1.3 * J)


def test_alpha_range_checked(fp):
    with pytest.raises(ValueError):
        CompositeOperator(fp.transform, 1.0)
    with pytest.raises(ValueError):
        CompositeOperator(fp.transform, -0.1)


# rotated potential


@pytest.mark.parametrize("angle", [0.0, np.pi / 2])
@pytest.mark.parametrize("alpha", [0.0, 0.5, 0.9])
def test_chiral_closed_form(fp, xs, angle, alpha):
    W = CompositeOperator(fp.transform, alpha, angle).rotated_potential()(xs)
    ref = chiral_rotated_potential(*fp_parts(fp), alpha, angle)(xs)
    assert np.abs(W - ref).max() <= 1e-10


def test_v14_vanishes_without_coupling(fp, xs):
    W = CompositeOperator(fp.transform, 0.0, 0.0).rotated_potential()(xs)
    assert np.abs(W[:, 0, 3]).max() <= 1e-14


def test_free_rotated_entries(fp, xs):
    alpha = 0.5
    W = fp.composite(alpha).rotated_potential()(xs)
    for key, f in fp.rotated_entries(alpha).items():
        i, j = int(key[0]) - 1, int(key[1]) - 1
        assert np.abs(W[:, i, j] - f(xs)).max() <= 1e-10
    assert W[1000, 0, 1].real == pytest.approx(0.315, abs=1e-12)


def test_free_v14_asymptotics(fp):
    alpha, m, k = 0.5, fp.m, fp.kappa
    far = fp.composite(alpha).rotated_potential()(np.array([-40.0, 40.0]))[:, 0, 3].real
    ref = [-m - alpha * k * (s * k + m) / (s * m + k) for s in (-1, 1)]
    np.testing.assert_allclose(far, ref, atol=1e-10)


def test_massive_closed_form(pt, xs):
    u2 = pt.seed.u2
    for alpha in (0.0, 0.25, 0.8):
        W = pt.composite(alpha).rotated_potential()(xs)
        ref = massive_rotated_potential(pt.A, pt.m, lambda x: u2(x)[..., 0], lambda x: u2(x)[..., 1], alpha)(xs)
        assert np.abs(W - ref).max() <= 1e-10


@pytest.mark.parametrize("alpha", [0.1, 0.25, 0.7])
def test_pt_golden_potential(pt, xs, alpha):
    W = pt.composite(alpha).rotated_potential()(xs)
    assert np.abs(W - pt_golden_potential(pt.kappa, alpha)(xs)).max() <= 1e-10


def test_rotated_potential_hermitian(fp, pt, xs):
    for model in (fp, pt):
        assert model.composite(0.6).rotated_potential().hermiticity_defect(xs) <= 1e-13


# algebra


def test_hermitian_by_quadrature(fp):
    c = fp.composite(0.5)
    x = np.linspace(-14, 14, 14001)
    bank = bispinor_bank()
    for f, df, _ in bank[:2]:
        for g, dg, _ in bank[2:]:
            Hg = c.apply_jet(x, g(x), dg(x))
            Hf = c.apply_jet(x, f(x), df(x))
            lhs = trapezoid(np.sum(np.conj(f(x)) * Hg, -1), x[1] - x[0])
            rhs = trapezoid(np.sum(np.conj(Hf) * g(x), -1), x[1] - x[0])
            assert abs(lhs - rhs) <= 1e-8


def test_superalgebra(fp, pt):
    x = np.linspace(-8, 8, 401)
    for model in (fp, pt):
        r = superalgebra_residuals(model.transform, [(f(x), df(x), d2(x)) for f, df, d2 in bispinor_bank()], x)
        assert r["commutator"] <= 1e-7 and r["anticommutator"] <= 1e-7


def test_grading(pt, xs):
    assert max(grading_defects(pt.transform, xs).values()) == 0.0
    np.testing.assert_array_equal(GAMMA @ GAMMA, np.eye(4))


# bispinors


def test_uncoupled_limit(fp, xs):
    c = fp.composite(0.0)
    psi = fp.mode(0.9)
    Psi = eigen_bispinor(c, psi, 0.9, 1)
    assert bispinor_residual(c, Psi, 0.9, xs) <= 1e-12


def test_free_bispinor_eigenrelation(fp, xs):
    c = fp.composite(0.5)
    lam = 0.7
    for sign in (1, -1):
        Psi = eigen_bispinor(c, fp.mode(lam), lam, sign)
        E = lam + sign * 0.5 * math.sqrt((lam - 0.2) * (lam + 0.2))
        assert composite_energy(c, lam, sign) == pytest.approx(E, abs=1e-15)
        assert bispinor_residual(c, Psi, E, xs) <= 1e-7


def test_bispinor_at_factorization_energy(fp, xs):
    c = fp.composite(0.5)
    Psi = eigen_bispinor(c, fp.mode(0.2), 0.2, 1)
    assert np.abs(Psi.upper(xs)).max() == 0.0


@pytest.mark.parametrize("index", [0, 1])
def test_missing_bispinors(fp, pt, xs, index):
    for model in (fp, pt):
        c = model.composite(0.4)
        Psi = missing_bispinor(c, index)
        assert bispinor_residual(c, Psi, c.eps[index], xs) <= 1e-9


@pytest.mark.parametrize("sign", [1, -1])
def test_derivative_bispinor_at_extremum(fp, sign):
    c = fp.composite(0.5)
    ex = extrema(fp.spectral_map(0.5))
    lam, E = (ex.lambda_up, ex.E_up) if sign > 0 else (ex.lambda_down, ex.E_down)
    Psi = derivative_bispinor(c, fp.mode(lam), fp.mode_dlam(lam), lam, sign)
    x = np.linspace(-5, 5, 401)
    assert bispinor_residual(c, Psi, E, x) <= 1e-6


def test_derivative_bispinor_off_extremum_is_not_eigen(fp):
    c = fp.composite(0.5)
    lam = 0.4
    Psi = derivative_bispinor(c, fp.mode(lam), fp.mode_dlam(lam), lam, -1)
    x = np.linspace(-5, 5, 401)
    assert bispinor_residual(c, Psi, composite_energy(c, lam, -1).real, x) > 1e-3


def test_eigen_bispinor_rejects_non_solution(fp):
    with pytest.raises(ValueError):
        eigen_bispinor(fp.composite(0.5), fp.mode(0.7), 0.8, 1)


@settings(max_examples=20, deadline=None)
@given(a1=st.floats(0.0, 0.95), a2=st.floats(0.0, 0.95), lam=st.floats(0.55, 3.0))
def test_bispinors_independent_of_alpha(fp, a1, a2, lam):
    x = np.linspace(-5, 5, 101)
    P1 = eigen_bispinor(fp.composite(a1), fp.mode(lam), lam, 1)
    P2 = eigen_bispinor(fp.composite(a2), fp.mode(lam), lam, 1)
    np.testing.assert_array_equal(P1(x), P2(x))
    c = fp.composite(a2)
    assert bispinor_residual(c, P2, composite_energy(c, lam, 1), x) <= 1e-7
