# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled propagation kernels for linear first-order systems y' = M(x) y.

The coefficient is tabulated on a uniform grid at nodes and midpoints:
``coef[2*j]`` is M(x_j) and ``coef[2*j + 1]`` is M(x_j + h/2).  Backward
integration is obtained by passing the reversed table with a negative step.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log

cnp.import_array()

ctypedef double complex cplx


cdef inline void _apply(const cplx[:, :, ::1] coef, Py_ssize_t row,
                        const cplx[:, ::1] y, cplx[:, ::1] out,
                        Py_ssize_t n, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t a, b, c
    cdef cplx s
    for a in range(n):
        for c in range(k):
            s = 0
            for b in range(n):
                s = s + coef[row, a, b] * y[b, c]
            out[a, c] = s


cdef inline void _rk4_step(const cplx[:, :, ::1] coef, Py_ssize_t j, double h,
                           cplx[:, ::1] y, cplx[:, ::1] k1, cplx[:, ::1] k2,
                           cplx[:, ::1] k3, cplx[:, ::1] k4, cplx[:, ::1] tmp,
                           Py_ssize_t n, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t a, c
    cdef double half = 0.5 * h
    _apply(coef, 2 * j, y, k1, n, k)
    for a in range(n):
        for c in range(k):
            tmp[a, c] = y[a, c] + half * k1[a, c]
    _apply(coef, 2 * j + 1, tmp, k2, n, k)
    for a in range(n):
        for c in range(k):
            tmp[a, c] = y[a, c] + half * k2[a, c]
    _apply(coef, 2 * j + 1, tmp, k3, n, k)
    for a in range(n):
        for c in range(k):
            tmp[a, c] = y[a, c] + h * k3[a, c]
    _apply(coef, 2 * j + 2, tmp, k4, n, k)
    for a in range(n):
        for c in range(k):
            y[a, c] = y[a, c] + (h / 6.0) * (k1[a, c] + 2.0 * k2[a, c]
                                             + 2.0 * k3[a, c] + k4[a, c])


cdef inline void _orthonormalize(cplx[:, ::1] y, double[::1] logscale,
                                 Py_ssize_t n, Py_ssize_t k) noexcept nogil:
    # modified Gram-Schmidt on the columns
    cdef Py_ssize_t a, c, p
    cdef cplx proj
    cdef double nrm
    for c in range(k):
        for p in range(c):
            proj = 0
            for a in range(n):
                proj = proj + y[a, p].conjugate() * y[a, c]
            for a in range(n):
                y[a, c] = y[a, c] - proj * y[a, p]
        nrm = 0.0
        for a in range(n):
            nrm = nrm + y[a, c].real * y[a, c].real + y[a, c].imag * y[a, c].imag
        nrm = sqrt(nrm)
        if nrm > 0.0:
            for a in range(n):
                y[a, c] = y[a, c] / nrm
            logscale[c] += log(nrm)


def rk4_trajectory(const cplx[:, :, ::1] coef, const cplx[:, ::1] y0, double h):
    """Classical RK4 over the tabulated coefficient; returns every node state."""
    cdef Py_ssize_t n = y0.shape[0]
    cdef Py_ssize_t k = y0.shape[1]
    cdef Py_ssize_t steps = (coef.shape[0] - 1) // 2
    cdef Py_ssize_t j, a, c
    out_arr = np.empty((steps + 1, n, k), dtype=np.complex128)
    cdef cplx[:, :, ::1] out = out_arr
    cdef cplx[:, ::1] y = np.array(y0, dtype=np.complex128, copy=True)
    cdef cplx[:, ::1] k1 = np.empty((n, k), dtype=np.complex128)
    cdef cplx[:, ::1] k2 = np.empty((n, k), dtype=np.complex128)
    cdef cplx[:, ::1] k3 = np.empty((n, k), dtype=np.complex128)
    cdef cplx[:, ::1] k4 = np.empty((n, k), dtype=np.complex128)
    cdef cplx[:, ::1] tmp = np.empty((n, k), dtype=np.complex128)
    with nogil:
        for a in range(n):
            for c in range(k):
                out[0, a, c] = y[a, c]
        for j in range(steps):
            _rk4_step(coef, j, h, y, k1, k2, k3, k4, tmp, n, k)
            for a in range(n):
                for c in range(k):
                    out[j + 1, a, c] = y[a, c]
    return out_arr


def rk4_subspace(const cplx[:, :, ::1] coef, const cplx[:, ::1] y0, double h):
    """RK4 propagation of a column subspace, re-orthonormalized every step.

    Returns the final orthonormal basis and the accumulated log growth of
    each Gram-Schmidt column.
    """
    cdef Py_ssize_t n = y0.shape[0]
    cdef Py_ssize_t k = y0.shape[1]
    cdef Py_ssize_t steps = (coef.shape[0] - 1) // 2
    cdef Py_ssize_t j
    cdef cplx[:, ::1] y = np.array(y0, dtype=np.complex128, copy=True)
    cdef cplx[:, ::1] k1 = np.empty((n, k), dtype=np.complex128)
    cdef cplx[:, ::1] k2 = np.empty((n, k), dtype=np.complex128)
    cdef cplx[:, ::1] k3 = np.empty((n, k), dtype=np.complex128)
    cdef cplx[:, ::1] k4 = np.empty((n, k), dtype=np.complex128)
    cdef cplx[:, ::1] tmp = np.empty((n, k), dtype=np.complex128)
    logscale_arr = np.zeros(k, dtype=np.float64)
    cdef double[::1] logscale = logscale_arr
    with nogil:
        _orthonormalize(y, logscale, n, k)
        for j in range(steps):
            _rk4_step(coef, j, h, y, k1, k2, k3, k4, tmp, n, k)
            _orthonormalize(y, logscale, n, k)
    return np.asarray(y), logscale_arr
