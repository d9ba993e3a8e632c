"""Uniform symmetric grids and gridded fields.

Every spatial object in the package lives on a uniform grid over
[-y_max, y_max] with an odd number of nodes, so y = 0 is always a node and
reflection symmetry is exactly representable.  Quadrature against the grid
is composite trapezoid (interior weight dy, endpoint weight dy/2), which is
spectrally accurate for the Gaussian-decaying integrands used here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["Grid", "Field", "make_grid", "default_y_max", "gradient"]


@dataclass(frozen=True, eq=True)
class Grid:
    """Uniform symmetric 1-d grid; n = 2*n_half + 1 nodes, spacing dy."""

    n_half: int
    dy: float

    @property
    def n(self) -> int:
        return 2 * self.n_half + 1

    @property
    def y_max(self) -> float:
        return self.n_half * self.dy

    @cached_property
    def y(self) -> np.ndarray:
        y = (np.arange(self.n) - self.n_half) * self.dy
        y.flags.writeable = False
        return y

    @cached_property
    def weights(self) -> np.ndarray:
        """Composite-trapezoid quadrature weights."""
        w = np.full(self.n, self.dy)
        w[0] = w[-1] = 0.5 * self.dy
        w.flags.writeable = False
        return w

    def key(self) -> tuple:
        return (self.n_half, self.dy)


def make_grid(y_max: float, dy: float = 0.05) -> Grid:
    """Grid covering [-y_max, y_max]; y_max is rounded up to a multiple of dy."""
    if y_max <= 0 or dy <= 0:
        raise ValueError(f"need y_max > 0 and dy > 0, got {y_max!r}, {dy!r}")
    n_half = int(np.ceil(y_max / dy - 1e-12))
    return Grid(n_half=n_half, dy=float(dy))


def default_y_max(K0: float, s_max: float, floor: float = 20.0, margin: float = 5.0) -> float:
    """Domain half-width wide enough to contain the cutoff support at s_max."""
    return max(floor, 2.0 * K0 * np.sqrt(s_max) + margin)


@dataclass
class Field:
    """Values sampled on a grid at rescaled time s."""

    grid: Grid
    values: np.ndarray
    s: float

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise ValueError(
                f"field shape {self.values.shape} does not match grid n={self.grid.n}"
            )

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), self.s)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


def gradient(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Centered first differences, one-sided at the two boundary nodes."""
    return np.gradient(values, grid.dy)
