"""Sampled outer approximation of the time-one map as a directed box graph."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .dynamics import SemiflowSystem, time_map_with_status
from .exprparse import EvaluationError
from .grid import BoxGrid, sample_all

DEFAULT_SAMPLES = 3
DEFAULT_PADDING = 0.125
_CHUNK_POINTS = 1 << 16


@dataclass(frozen=True)
class TransitionGraph:
    """CSR adjacency: successors of node v are ``indices[indptr[v]:indptr[v+1]]``."""

    n_nodes: int
    indptr: np.ndarray
    indices: np.ndarray
    exiting: np.ndarray
    params: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_edges(cls, n_nodes: int, edges, exiting=None, params=None):
        edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if len(edges) and (edges.min() < 0 or edges.max() >= n_nodes):
            raise ValueError("edge references a node outside the graph")
        keys = np.unique(edges[:, 0] * n_nodes + edges[:, 1]) if len(edges) else np.zeros(0, np.int64)
        src, dst = np.divmod(keys, n_nodes)
        indptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        indptr = np.cumsum(indptr)
        if exiting is None:
            exiting = np.zeros(n_nodes, dtype=bool)
        return cls(n_nodes, indptr, dst.astype(np.int64), np.asarray(exiting, bool), params or {})

    def successors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    @property
    def n_edges(self) -> int:
        return len(self.indices)

    def edges(self) -> np.ndarray:
        src = np.repeat(np.arange(self.n_nodes), np.diff(self.indptr))
        return np.stack([src, self.indices], axis=1)

    def adjacency_lists(self) -> list:
        return [self.successors(v).tolist() for v in range(self.n_nodes)]

    def edge_list_text(self) -> str:
        return "".join(f"{s} {d}\n" for s, d in self.edges())


def padded_targets(grid: BoxGrid, images: np.ndarray, padding: float):
    """Boxes meeting the closed rectangles image +/- padding*width.

    Returns (point index, target box id) pairs.
    """
    u = grid.continuous_coords(images)
    top = grid.per_axis - 1
    lo = np.clip(np.floor(u - padding), 0, top).astype(np.int64)
    hi = np.clip(np.floor(u + padding), 0, top).astype(np.int64)
    span = hi - lo
    max_span = span.max(axis=0) if len(span) else np.zeros(grid.dim, np.int64)
    pts, tgts = [], []
    for off in itertools.product(*(range(s + 1) for s in max_span)):
        off = np.asarray(off)
        ok = np.all(off <= span, axis=1)
        idx = np.nonzero(ok)[0]
        pts.append(idx)
        tgts.append(grid.ids(lo[idx] + off))
    return np.concatenate(pts), np.concatenate(tgts)


def _failing_box(sys, points, owners, time) -> int:
    for b in np.unique(owners):
        try:
            time_map_with_status(sys, points[owners == b], time)
        except EvaluationError:
            return int(b)
    return -1


def build_transition(
    grid: BoxGrid,
    sys: SemiflowSystem,
    k: int = DEFAULT_SAMPLES,
    padding: float = DEFAULT_PADDING,
    time: float = 1.0,
) -> TransitionGraph:
    """Edges from each box to every box within ``padding`` widths of a sample image."""
    if k < 2:
        raise ValueError("need k >= 2 samples per axis")
    if padding < 0:
        raise ValueError("padding must be non-negative")
    points, owners = sample_all(grid, k)
    exiting = np.zeros(grid.n_boxes, dtype=bool)
    keys = []
    for start in range(0, len(points), _CHUNK_POINTS):
        chunk = points[start : start + _CHUNK_POINTS]
        own = owners[start : start + _CHUNK_POINTS]
        try:
            images, exited = time_map_with_status(sys, chunk, time)
        except EvaluationError as exc:
            raise EvaluationError(f"{exc} in box {_failing_box(sys, chunk, own, time)}") from exc
        exiting[own[exited]] = True
        pi, tg = padded_targets(grid, images, padding)
        keys.append(np.unique(own[pi] * grid.n_boxes + tg))
    keys = np.unique(np.concatenate(keys))
    src, dst = np.divmod(keys, grid.n_boxes)
    indptr = np.zeros(grid.n_boxes + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    params = {"samples": k, "padding": padding, "time": time}
    return TransitionGraph(grid.n_boxes, np.cumsum(indptr), dst, exiting, params)
