"""Compare the compiled and pure-Python RK4 propagation kernels.

Usage::

    python benchmarks/bench_kernels.py [--steps 8000] [--repeat 5]

Propagates the Poschl-Teller shooting problem (2x2) and the rotated composite
(4x4 subspace) with each available backend, reports the best wall time and
the maximum deviation between backends.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from susy_dirac.models import PoschlTellerModel
from susy_dirac.numkit import propagate, propagate_subspace, tabulate
from susy_dirac.numkit.kernels import available_backends


def _best(fn, repeat: int) -> tuple[float, object]:
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=8000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    pt = PoschlTellerModel()
    x0, x1 = -20.0, 0.0
    h = (x1 - x0) / args.steps
    two = tabulate(pt.H.coefficient(2.5), x0, x1, args.steps)
    op4 = pt.composite(0.25).rotated()
    four = tabulate(op4.coefficient(1.5), x0, x1, args.steps)
    y2 = np.array([1.0, 0.3], dtype=complex)
    y4 = np.eye(4, 2, dtype=complex)

    backends = available_backends()
    results = {}
    print(f"{'kernel':<22}{'backend':<10}{'best [ms]':>12}")
    for name in backends:
        t_a, a = _best(lambda: propagate(two, y2, h, backend=name), args.repeat)
        t_b, b = _best(lambda: propagate_subspace(four, y4, h, backend=name), args.repeat)
        results[name] = (a, b)
        print(f"{'rk4_trajectory 2x2':<22}{name:<10}{1e3 * t_a:>12.2f}")
        print(f"{'rk4_subspace 4x4':<22}{name:<10}{1e3 * t_b:>12.2f}")
    if {"python", "cython"} <= results.keys():
        (pa, pb), (ca, cb) = results["python"], results["cython"]
        dev_a = np.abs(pa - ca).max() / np.abs(pa).max()
        dev_b = max(np.abs(pb[0] - cb[0]).max(), np.abs(np.asarray(pb[1]) - np.asarray(cb[1])).max())
        print(f"max relative deviation: trajectory {dev_a:.2e}, subspace {dev_b:.2e}")
    else:
        print("compiled backend unavailable; only the fallback was timed")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
