"""Backend selection for the propagation kernels.

The compiled extension is used when importable; set ``SUSY_DIRAC_BACKEND=python``
to force the pure-Python fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("SUSY_DIRAC_BACKEND", "").lower() == "python":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

rk4_trajectory = _impl.rk4_trajectory
rk4_subspace = _impl.rk4_subspace

__all__ = ["BACKEND", "rk4_trajectory", "rk4_subspace", "available_backends"]


def available_backends() -> dict:
    """Map backend name to its module, for agreement tests and benchmarks."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels  # type: ignore[attr-defined]

        out["cython"] = _kernels
    except ImportError:
        pass
    return out
