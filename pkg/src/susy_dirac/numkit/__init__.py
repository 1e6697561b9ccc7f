"""Numerical substrate: grids, eigensolvers, ODE integration, special functions."""

from .grid import Grid, GridFunction, trapezoid
from .linalg import NonHermitianError, eigen_window, hermitian_eigen
from .ode import (
    ODESolution,
    StepUnderflowError,
    integrate_linear_ode,
    propagate,
    propagate_subspace,
    tabulate,
)
from .special import UnsupportedRegimeError, gauss_2f1, jacobi_polynomial
from .kernels import BACKEND

__all__ = [
    "BACKEND",
    "Grid",
    "GridFunction",
    "NonHermitianError",
    "ODESolution",
    "StepUnderflowError",
    "UnsupportedRegimeError",
    "eigen_window",
    "gauss_2f1",
    "hermitian_eigen",
    "integrate_linear_ode",
    "jacobi_polynomial",
    "propagate",
    "propagate_subspace",
    "tabulate",
    "trapezoid",
]
