"""Jacobi polynomials and the Gauss hypergeometric function."""

from __future__ import annotations

import numpy as np
from scipy import special as sps


class UnsupportedRegimeError(ValueError):
    """Parameters or argument fall outside the implemented transformations."""


def jacobi_polynomial(n: int, a: float, b: float, y):
    """Jacobi polynomial :math:`P_n^{(a,b)}(y)` by three-term recurrence.

    Arbitrary real ``a`` and ``b`` are accepted, including negative
    non-integers.  When a recurrence denominator vanishes the explicit
    binomial sum is used instead.

    Parameters
    ----------
    n : int
        Degree, ``n >= 0``.
    a, b : float
        Jacobi parameters.
    y : float or ndarray
        Evaluation points.
    """
    if int(n) != n or n < 0:
        raise ValueError(f"degree must be a non-negative integer, got {n}")
    n = int(n)
    y = np.asarray(y, dtype=float)
    p0 = np.ones_like(y)
    if n == 0:
        return p0 if p0.ndim else float(p0)
    p1 = (a + 1.0) + (a + b + 2.0) * (y - 1.0) / 2.0
    for k in range(1, n):
        s = 2 * k + a + b
        den = 2 * (k + 1) * (k + a + b + 1) * s
        if den == 0.0:
            return _jacobi_sum(n, a, b, y)
        c1 = (s + 1) * ((s + 2) * s * y + a * a - b * b)
        c2 = 2 * (k + a) * (k + b) * (s + 2)
        p0, p1 = p1, (c1 * p1 - c2 * p0) / den
    return p1 if p1.ndim else float(p1)


def _jacobi_sum(n, a, b, y):
    s = np.arange(n + 1)
    c = sps.binom(n + a, n - s) * sps.binom(n + b, s)
    ym = (y[..., None] - 1.0) / 2.0
    yp = (y[..., None] + 1.0) / 2.0
    out = np.sum(c * ym**s * yp ** (n - s), axis=-1)
    return out if out.ndim else float(out)


def _series(p, q, r, z, max_terms=4000):
    term = 1.0 + 0j
    total = 1.0 + 0j
    for k in range(max_terms):
        term *= (p + k) * (q + k) / ((r + k) * (k + 1)) * z
        total += term
        if term == 0 or abs(term) <= 1e-17 * abs(total):
            return total
    raise UnsupportedRegimeError(f"2F1 series failed to converge at z={z}")


def _is_nonpos_int(v) -> bool:
    v = complex(v)
    return v.imag == 0.0 and v.real <= 0 and v.real == round(v.real)


def _is_int(v) -> bool:
    v = complex(v)
    return v.imag == 0.0 and v.real == round(v.real)


def gauss_2f1(p, q, r, z) -> complex:
    """Gauss hypergeometric function :math:`{}_2F_1(p, q; r; z)`.

    Supported regimes
    -----------------
    * ``|z| <= 0.5``: power series.
    * ``|z/(z-1)| <= 0.5``: Pfaff transformation to the series.
    * ``|1-z| <= 0.5``: connection formula around ``z = 1`` with
      non-integer ``r - p - q``.
    * ``z = 1`` with ``Re(r - p - q) > 0``: Gauss summation.
    * terminating series (``p`` or ``q`` a non-positive integer): any ``z``.

    Everything else raises :class:`UnsupportedRegimeError`.
    """
    p, q, r, z = complex(p), complex(q), complex(r), complex(z)
    if _is_nonpos_int(r):
        raise UnsupportedRegimeError(f"r={r} is a non-positive integer")
    if _is_nonpos_int(p) or _is_nonpos_int(q):
        return _series(p, q, r, z)
    if z == 0:
        return 1.0 + 0j
    if abs(z) <= 0.5:
        return _series(p, q, r, z)
    if z == 1:
        s = r - p - q
        if s.real > 0:
            return complex(sps.gamma(r) * sps.gamma(s) * sps.rgamma(r - p) * sps.rgamma(r - q))
        raise UnsupportedRegimeError("z=1 with Re(r-p-q) <= 0 diverges")
    w = z / (z - 1.0)
    if abs(w) <= 0.5:
        return (1.0 - z) ** (-p) * _series(p, r - q, r, w)
    if abs(1.0 - z) <= 0.5 and z.real < 1.0:
        s = r - p - q
        if _is_int(s):
            raise UnsupportedRegimeError("connection formula needs non-integer r-p-q")
        zz = 1.0 - z
        t1 = sps.gamma(r) * sps.gamma(s) * sps.rgamma(r - p) * sps.rgamma(r - q)
        t2 = sps.gamma(r) * sps.gamma(-s) * sps.rgamma(p) * sps.rgamma(q)
        f1 = _series(p, q, 1.0 - s, zz) if t1 != 0 else 0.0
        f2 = _series(r - p, r - q, 1.0 + s, zz) if t2 != 0 else 0.0
        return complex(t1 * f1 + zz**s * t2 * f2)
    raise UnsupportedRegimeError(f"2F1 argument z={z} outside supported regions")
