"""Uniform box subdivision of a compact rectangle."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

MAX_BOXES = 1 << 24
CORNER_NUDGE = 1e-9


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class BoxGrid:
    """``2**depth`` boxes per axis; box ids are row-major over box coordinates."""

    lower: tuple
    upper: tuple
    depth: int

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def per_axis(self) -> int:
        return 1 << self.depth

    @property
    def shape(self) -> tuple:
        return (self.per_axis,) * self.dim

    @property
    def n_boxes(self) -> int:
        return self.per_axis**self.dim

    @property
    def width(self) -> np.ndarray:
        return (np.asarray(self.upper) - np.asarray(self.lower)) / self.per_axis

    def coords(self, ids) -> np.ndarray:
        """Integer box coordinates for ids; shape (m, n) (or (n,) for a scalar id)."""
        c = np.unravel_index(np.asarray(ids), self.shape)
        return np.stack(c, axis=-1)

    def ids(self, coords) -> np.ndarray:
        coords = np.asarray(coords)
        return np.ravel_multi_index(tuple(np.moveaxis(coords, -1, 0)), self.shape)

    def box_bounds(self, ids):
        """Lower and upper corners of the given boxes."""
        c = self.coords(ids)
        lo = np.asarray(self.lower) + c * self.width
        hi = np.asarray(self.lower) + (c + 1) * self.width
        return lo, hi

    def centers(self, ids=None) -> np.ndarray:
        if ids is None:
            ids = np.arange(self.n_boxes)
        c = self.coords(ids)
        return np.asarray(self.lower) + (c + 0.5) * self.width

    def continuous_coords(self, points) -> np.ndarray:
        """Position of points in units of box widths from the lower corner."""
        return (np.asarray(points, dtype=np.float64) - np.asarray(self.lower)) / self.width

    def locate_coords(self, points) -> np.ndarray:
        c = np.floor(self.continuous_coords(points)).astype(np.int64)
        return np.clip(c, 0, self.per_axis - 1)

    def locate_many(self, points) -> np.ndarray:
        return self.ids(self.locate_coords(points))


def build_grid(lower, upper, depth: int, max_boxes: int = MAX_BOXES) -> BoxGrid:
    lower = tuple(float(a) for a in lower)
    upper = tuple(float(b) for b in upper)
    if len(lower) != len(upper) or not lower:
        raise GridError("domain bounds must have matching positive dimension")
    if any(not a < b for a, b in zip(lower, upper)):
        raise GridError("domain intervals must satisfy a < b")
    if not isinstance(depth, (int, np.integer)) or not 1 <= depth <= 16:
        raise GridError(f"depth must be an integer in [1, 16], got {depth!r}")
    count = (1 << depth) ** len(lower)
    if count > max_boxes:
        raise GridError(f"{count} boxes exceed the cap of {max_boxes}")
    return BoxGrid(lower, upper, int(depth))


def locate(grid: BoxGrid, x) -> int:
    """Id of the box containing x; points on the upper face go to the last box."""
    return int(grid.locate_many(np.asarray(x, dtype=np.float64).reshape(1, -1))[0])


def sample_offsets(dim: int, k: int) -> np.ndarray:
    """Sample positions inside the unit box: k**dim lattice points then 2**dim nudged corners."""
    if k < 2:
        raise GridError("need at least 2 samples per axis")
    fracs = (np.arange(k) + 0.5) / k
    lattice = np.array(list(itertools.product(fracs, repeat=dim)))
    corner_vals = (CORNER_NUDGE, 1.0 - CORNER_NUDGE)
    corners = np.array(list(itertools.product(corner_vals, repeat=dim)))
    return np.vstack([lattice, corners])


def sample_points(grid: BoxGrid, b: int, k: int) -> np.ndarray:
    c = grid.coords(b)
    return np.asarray(grid.lower) + (c + sample_offsets(grid.dim, k)) * grid.width


def sample_all(grid: BoxGrid, k: int, ids=None):
    """Samples of many boxes at once; returns (points, owning box id per point)."""
    if ids is None:
        ids = np.arange(grid.n_boxes)
    ids = np.asarray(ids)
    offs = sample_offsets(grid.dim, k)
    c = grid.coords(ids)
    pts = np.asarray(grid.lower) + (c[:, None, :] + offs[None, :, :]) * grid.width
    owners = np.repeat(ids, len(offs))
    return pts.reshape(-1, grid.dim), owners
