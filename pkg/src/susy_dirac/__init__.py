"""Supersymmetric composites of one-dimensional Dirac operators.

Subpackages and modules
-----------------------
numkit
    Grids, ODE integration, eigen solvers and special functions.
dirac
    Matrix Dirac operators, lattice discretization, shooting, scattering.
darboux
    Supersymmetric (Darboux) transformation engine and identity checks.
composite
    The 4x4 composite operator, its rotation to diagonal velocities and
    eigen-bispinors.
spectrum
    The spectral map, its extrema and contour, crossings and BIC couplings.
models
    Free-particle and Poschl-Teller systems in closed form.
verify, cli, io
    Validation report, command line and table serialization.
"""

import os as _os

# cap BLAS threads before numpy loads
_threads = _os.environ.get("SUSY_DIRAC_THREADS")
if _threads and _threads.isdigit() and int(_threads) > 0:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .composite import CompositeOperator, rotation_matrix, velocity_defect  # noqa: E402
from .darboux import SeedPair, SpinorFunction, TransformData, build_transform, verify_factorization  # noqa: E402
from .dirac import DiracOperator, MatrixField, Shooter, discretize, scattering  # noqa: E402
from .models import FreeParticleModel, PoschlTellerModel, pt_composite_levels  # noqa: E402
from .spectrum import (  # noqa: E402
    BandStructure,
    SpectralMap,
    band_thresholds,
    bic_critical_alpha,
    crossing_alpha,
    extrema,
    real_energy_contour,
)

__version__ = "0.1.0"

__all__ = [
    "BandStructure",
    "CompositeOperator",
    "DiracOperator",
    "FreeParticleModel",
    "MatrixField",
    "PoschlTellerModel",
    "SeedPair",
    "Shooter",
    "SpectralMap",
    "SpinorFunction",
    "TransformData",
    "band_thresholds",
    "bic_critical_alpha",
    "build_transform",
    "crossing_alpha",
    "discretize",
    "extrema",
    "pt_composite_levels",
    "real_energy_contour",
    "rotation_matrix",
    "scattering",
    "velocity_defect",
    "verify_factorization",
]
