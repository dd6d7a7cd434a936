"""Uniform 1D grid on [-L, L] and trapezoidal quadrature weights."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from dmiwall.errors import PreconditionError

MIN_POINTS = 16


@dataclass(frozen=True)
class Grid:
    """Uniform grid x_i = -L + i*spacing, i = 0..n_points-1."""

    half_length: float
    n_points: int
    spacing: float = field(init=False)
    x: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        L, n = self.half_length, self.n_points
        if not (isinstance(n, (int, np.integer)) and n >= MIN_POINTS):
            raise PreconditionError(f"invalid grid: n_points={n} (need integer >= {MIN_POINTS})")
        if not (math.isfinite(L) and L > 0):
            raise PreconditionError(f"invalid grid: half_length={L}")
        object.__setattr__(self, "spacing", 2.0 * L / (n - 1))
        x = -L + self.spacing * np.arange(n)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def trapezoid_weights(self) -> np.ndarray:
        """Quadrature weights: spacing everywhere, halved at the two endpoints."""
        w = np.full(self.n_points, self.spacing)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def trapezoid(self, values: np.ndarray) -> float:
        """Trapezoidal integral of point values over [-L, L]."""
        v = np.asarray(values, dtype=float)
        if v.shape[0] != self.n_points:
            raise PreconditionError("values do not match grid size")
        return float(self.trapezoid_weights @ v)


def make_grid(half_length: float, n_points: int) -> Grid:
    """Build the uniform grid; rejects non-finite or degenerate inputs."""
    return Grid(float(half_length), int(n_points))


def default_half_length(gamma: float) -> float:
    """Half-length 40/sqrt(1-gamma^2), sized so wall tails ~e^{-2k L} are below 1e-30."""
    if gamma * gamma >= 1.0:
        raise PreconditionError("gamma out of range")
    return 40.0 / math.sqrt(1.0 - gamma * gamma)
