"""Uniform grids and sampled vector-valued functions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``[x_min, x_max]`` with both endpoints included.

    Parameters
    ----------
    x_min, x_max : float
        Interval ends, ``x_min < x_max``.
    n_points : int
        Number of samples, at least 8.
    """

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if not self.x_min < self.x_max:
            raise ValueError(f"x_min={self.x_min} must be below x_max={self.x_max}")
        if int(self.n_points) != self.n_points or self.n_points < 8:
            raise ValueError(f"n_points must be an integer >= 8, got {self.n_points}")

    @classmethod
    def from_spacing(cls, x_min: float, x_max: float, h: float) -> "Grid":
        """Grid whose spacing is ``h`` (rounded so the endpoints are hit)."""
        n = int(round((x_max - x_min) / h)) + 1
        return cls(float(x_min), float(x_max), n)

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min


def trapezoid(values: np.ndarray, h: float) -> np.ndarray:
    """Composite trapezoid rule along the first axis for uniform spacing ``h``."""
    values = np.asarray(values)
    return h * (values.sum(axis=0) - 0.5 * (values[0] + values[-1]))


@dataclass(frozen=True)
class GridFunction:
    """Complex vector-valued samples on a :class:`Grid`.

    ``values`` has shape ``(grid.n_points, components)``; spinors use two
    components and bispinors four.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.grid.n_points:
            raise ValueError(
                f"values shape {v.shape} does not match grid with {self.grid.n_points} points"
            )
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: Grid, f: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        """Sample a vectorized callable returning shape ``(n, components)``."""
        return cls(grid, np.asarray(f(grid.x)))

    @property
    def components(self) -> int:
        return self.values.shape[1]

    def inner(self, other: "GridFunction") -> complex:
        """Trapezoid approximation of the L2 inner product, conjugate-linear in ``self``."""
        dens = np.sum(np.conj(self.values) * other.values, axis=1)
        return complex(trapezoid(dens, self.grid.h))

    def norm(self) -> float:
        dens = np.sum(np.abs(self.values) ** 2, axis=1)
        return float(np.sqrt(trapezoid(dens, self.grid.h)))

    def normalized(self) -> "GridFunction":
        return GridFunction(self.grid, self.values / self.norm())

    def density(self) -> np.ndarray:
        return np.sum(np.abs(self.values) ** 2, axis=1)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values - other.values)

    def scale(self, c: complex) -> "GridFunction":
        return GridFunction(self.grid, c * self.values)
