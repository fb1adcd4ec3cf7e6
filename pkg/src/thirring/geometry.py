"""Lab/null coordinate geometry: diamonds, uniform null grids, time slices.

Null coordinates are (alpha, beta) = (x + t, x - t); the system's
characteristics become coordinate lines.  All grids are uniform squares in
(alpha, beta) with the diagonal alpha = beta (the t = 0 slice) on-lattice,
so initial data and every characteristic integral live on grid nodes with
no interpolation.  Lab times are restricted to the anti-diagonal family
t = d*h/2 for integer d.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LabPoint",
    "NullPoint",
    "Diamond",
    "NullGrid",
    "SliceTimeError",
    "lab_to_null",
    "null_to_lab",
    "time_slice",
]


class SliceTimeError(ValueError):
    """Requested time does not sit on the grid's anti-diagonal family."""


@dataclass(frozen=True)
class LabPoint:
    t: float
    x: float


@dataclass(frozen=True)
class NullPoint:
    alpha: float
    beta: float


def lab_to_null(p: LabPoint) -> NullPoint:
    """(t, x) -> (alpha, beta) = (x + t, x - t)."""
    return NullPoint(alpha=p.x + p.t, beta=p.x - p.t)


def null_to_lab(q: NullPoint) -> LabPoint:
    """(alpha, beta) -> (t, x) = ((alpha - beta)/2, (alpha + beta)/2)."""
    return LabPoint(t=0.5 * (q.alpha - q.beta), x=0.5 * (q.alpha + q.beta))


@dataclass(frozen=True)
class Diamond:
    """Causal diamond centered at x = center:
    the points with |t + y - center| <= radius and |t - y + center| <= radius.
    """

    center: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"diamond radius must be positive, got {self.radius!r}")

    def contains(self, t, x):
        u = (np.asarray(x) - self.center) + np.asarray(t)
        v = (np.asarray(x) - self.center) - np.asarray(t)
        return (np.abs(u) <= self.radius) & (np.abs(v) <= self.radius)


@dataclass(frozen=True)
class NullGrid:
    """Uniform square lattice on [-R, R]^2 in (alpha, beta).

    Spacing h = 2R/(n-1); node i sits at -R + i*h on both axes, so the
    diagonal is a subset of the node set.  n is conventionally odd so that
    time slices symmetric about t = 0 exist in matched pairs.
    """

    radius: float
    n: int

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"grid radius must be positive, got {self.radius!r}")
        if self.n < 3:
            raise ValueError(f"grid needs at least 3 nodes per axis, got {self.n}")

    @property
    def h(self) -> float:
        return 2.0 * self.radius / (self.n - 1)

    @property
    def nodes(self):
        """Shared alpha/beta node coordinates: -R + i*h, i = 0..n-1."""
        return -self.radius + self.h * np.arange(self.n)

    def level_of_time(self, t):
        """Anti-diagonal index d with t = d*h/2, or SliceTimeError.

        The error message names the two nearest representable times.
        """
        d_real = 2.0 * t / self.h
        d = int(round(d_real))
        if abs(d_real - d) > 1e-9 * max(1.0, abs(d_real)):
            lo = np.floor(d_real) * self.h / 2.0
            hi = np.ceil(d_real) * self.h / 2.0
            raise SliceTimeError(
                f"t = {t!r} is not on the anti-diagonal lattice t = d*h/2 "
                f"(h = {self.h!r}); nearest representable times are "
                f"{lo!r} and {hi!r}"
            )
        if abs(d) > self.n - 1:
            raise SliceTimeError(
                f"|t| = {abs(t)!r} exceeds the diamond extent {self.radius!r}"
            )
        return d

    def slice_positions(self, d):
        """Lab x positions of the anti-diagonal level d (length n - |d|)."""
        return -self.radius + abs(d) * self.h / 2.0 + self.h * np.arange(self.n - abs(d))

    def slice_indices(self, d):
        """(rows, cols) index arrays of the level-d nodes; rows - cols = d."""
        k = np.arange(self.n - abs(d))
        if d >= 0:
            return k + d, k
        return k, k - d

    def to_manifest(self):
        return {"radius": self.radius, "n": self.n, "h": self.h}


def time_slice(grid: NullGrid, fields, t):
    """Extract psi(t, .), phi(t, .) on the lab points of one anti-diagonal.

    `fields` is any object with square arrays .psi and .phi on the grid.
    Returns (x, psi, phi); t = 0 reproduces the stored data samples exactly.
    """
    d = grid.level_of_time(t)
    rows, cols = grid.slice_indices(d)
    return grid.slice_positions(d), fields.psi[rows, cols], fields.phi[rows, cols]
