"""A complete Lyapunov function for the time-one map on the box grid.

Values are exact rationals. With ``K`` recurrent components and
``D = ceil(log2(max(K, 2)))``, the component of rank ``r`` gets the middle-
thirds Cantor point whose first ``D`` ternary digits are twice the binary
digits of ``r``. Every such value is the left end of a depth-``D`` ternary
cell ``[j/3^D, (j+1)/3^D)``; transient components are placed in the middle
third of a cell, so their ternary digit ``D+1`` is always 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .chainrec import MorseGraph
from .grid import BoxGrid

TRANSIENT = "transient"
RECURRENT = "recurrent"


class EmptyChainRecurrentSet(ValueError):
    pass


def cantor_depth(n_recurrent: int) -> int:
    return max(1, math.ceil(math.log2(max(n_recurrent, 2))))


def cantor_value(rank: int, depth: int) -> Fraction:
    """Sum over j of 2*b_j/3^j, b_1..b_depth the big-endian bits of ``rank``."""
    if not 0 <= rank < 2**depth:
        raise ValueError(f"rank {rank} does not fit in {depth} bits")
    num = 0
    for bit in format(rank, f"0{depth}b"):
        num = 3 * num + 2 * int(bit)
    return Fraction(num, 3**depth)


def ternary_digits(v: Fraction, count: int) -> list:
    """First ``count`` ternary digits of v in [0, 1)."""
    digits = []
    for _ in range(count):
        v *= 3
        d = math.floor(v)
        digits.append(d)
        v -= d
    return digits


def recurrence_rank_order(m: MorseGraph) -> list:
    """Recurrent component ids sorted by (layer, smallest member box id)."""
    rec = m.recurrent_ids()
    return sorted(rec, key=lambda c: (int(m.layer[c]), int(m.members[c][0])))


def assign_component_values(m: MorseGraph):
    """Returns (Cantor depth D, {component id: exact value})."""
    order = recurrence_rank_order(m)
    if not order:
        raise EmptyChainRecurrentSet("empty chain recurrent set")
    depth = cantor_depth(len(order))
    return depth, {c: cantor_value(r, depth) for r, c in enumerate(order)}


@dataclass(frozen=True)
class LyapunovAssignment:
    morse: MorseGraph
    cantor_depth: int
    component_value: tuple  # exact value per Morse component
    box_value: np.ndarray  # float value per box
    box_component: np.ndarray  # Morse component per box
    box_recurrent: np.ndarray
    box_exiting: np.ndarray
    grid: BoxGrid | None = None
    mode: str = "constant"
    table: dict = field(default_factory=dict)  # recurrent component id -> exact value

    @property
    def n_boxes(self) -> int:
        return len(self.box_value)

    def tag(self, b: int) -> str:
        return RECURRENT if self.box_recurrent[b] else TRANSIENT

    def distinct_values(self) -> np.ndarray:
        return np.unique(self.box_value)

    def value_range(self) -> float:
        return float(self.box_value.max() - self.box_value.min())

    def with_mode(self, mode: str) -> "LyapunovAssignment":
        if mode not in ("constant", "interpolated"):
            raise ValueError(f"unknown evaluation mode {mode!r}")
        return LyapunovAssignment(
            self.morse,
            self.cantor_depth,
            self.component_value,
            self.box_value,
            self.box_component,
            self.box_recurrent,
            self.box_exiting,
            self.grid,
            mode,
            self.table,
        )

    def __call__(self, points) -> np.ndarray:
        """Evaluate at a batch of points, shape (m, n)."""
        if self.grid is None:
            raise ValueError("point evaluation needs a grid")
        pts = np.asarray(points, dtype=np.float64).reshape(-1, self.grid.dim)
        if self.mode == "constant":
            return self.box_value[self.grid.locate_many(pts)]
        return _interpolate(self.grid, self.box_value, pts)


def _interpolate(grid: BoxGrid, values: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Multilinear interpolation between box centers, clamped at the outer half boxes."""
    vals = values.reshape(grid.shape)
    u = grid.continuous_coords(pts) - 0.5
    base = np.clip(np.floor(u), 0, grid.per_axis - 2).astype(np.int64)
    frac = np.clip(u - base, 0.0, 1.0)
    out = np.zeros(len(pts))
    for corner in range(1 << grid.dim):
        bits = [(corner >> (grid.dim - 1 - i)) & 1 for i in range(grid.dim)]
        weight = np.ones(len(pts))
        idx = []
        for i, bit in enumerate(bits):
            weight *= frac[:, i] if bit else 1.0 - frac[:, i]
            idx.append(base[:, i] + bit)
        out += weight * vals[tuple(idx)]
    return out


def assign_transient_values(
    m: MorseGraph, table: dict, depth: int, grid: BoxGrid | None = None
) -> LyapunovAssignment:
    """Fill in transient components so values strictly drop along every DAG edge.

    A transient component sits in the ternary cell just below its lowest
    upstream recurrent component (the top cell if there is none), so an
    orbit leaving a recurrent component keeps a nearby value. Inside the
    middle third of that cell it sits one step above its highest transient
    successor in the same cell.
    """
    scale = 3**depth
    n = m.n_components
    cell = [0] * n
    height = [0] * n
    # ids are topological, so predecessors come first
    upper = [scale] * n
    for c in range(n):
        if c in table:
            v = table[c]
            assert (v * scale).denominator == 1
            cell[c] = int(v * scale)
            bound = cell[c]
        else:
            cell[c] = upper[c] - 1
            bound = upper[c]
        for d in m.dag[c]:
            upper[d] = min(upper[d], bound)
    for c in range(n - 1, -1, -1):
        if c not in table:
            height[c] = 1 + max(
                (height[d] for d in m.dag[c] if d not in table and cell[d] == cell[c]),
                default=-1,
            )
    max_height = max((height[c] for c in range(n) if c not in table), default=0)
    unit = Fraction(1, 3 * scale)
    values = []
    for c in range(n):
        if c in table:
            values.append(table[c])
        else:
            offset = Fraction(height[c] + 1, max_height + 2)
            values.append(Fraction(3 * cell[c] + 1, 3 * scale) + unit * offset)
    for a, b in m.dag_edges():
        if not values[a] > values[b]:
            raise AssertionError("monotone assignment infeasible")
    comp_float = np.array([float(v) for v in values])
    box_component = np.asarray(m.component_of)
    box_recurrent = m.recurrent[box_component]
    box_exiting = m.exiting[box_component]
    return LyapunovAssignment(
        m,
        depth,
        tuple(values),
        comp_float[box_component],
        box_component,
        box_recurrent,
        box_exiting,
        grid,
        "constant",
        dict(table),
    )


def build_assignment(m: MorseGraph, grid: BoxGrid | None = None) -> LyapunovAssignment:
    depth, table = assign_component_values(m)
    return assign_transient_values(m, table, depth, grid)


def ell(a: LyapunovAssignment, grid: BoxGrid, x) -> float:
    """Value of the map Lyapunov function at a single point."""
    pts = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if a.mode == "constant":
        return float(a.box_value[grid.locate_many(pts)[0]])
    return float(_interpolate(grid, a.box_value, pts)[0])


# Structural checks. Each returns a list of counterexamples (empty on success).


def cantor_violations(a: LyapunovAssignment) -> list:
    D = a.cantor_depth
    bad = []
    for c, v in enumerate(a.component_value):
        if a.morse.recurrent[c]:
            digits_ok = (v * 3**D).denominator == 1 and all(
                d in (0, 2) for d in ternary_digits(v, D)
            )
            if not digits_ok:
                bad.append({"component": c, "value": str(v), "kind": "recurrent"})
        elif ternary_digits(v, D + 1)[D] != 1:
            bad.append({"component": c, "value": str(v), "kind": "transient"})
        if float(v) != a.box_value[a.morse.members[c][0]]:
            bad.append({"component": c, "value": str(v), "kind": "float mismatch"})
    return bad


def dag_monotonicity_violations(a: LyapunovAssignment) -> list:
    vals = a.component_value
    return [(x, y) for x, y in a.morse.dag_edges() if not vals[x] > vals[y]]


def edge_monotonicity_violations(a: LyapunovAssignment, g) -> list:
    """Graph edges b -> b' with value(b) < value(b'), or equal across components."""
    edges = g.edges()
    va = a.box_value[edges[:, 0]]
    vb = a.box_value[edges[:, 1]]
    comp = a.box_component
    same = (comp[edges[:, 0]] == comp[edges[:, 1]]) & a.box_recurrent[edges[:, 0]]
    bad = (va < vb) | ((va == vb) & ~same)
    return edges[bad].tolist()


def rank_order_violations(a: LyapunovAssignment) -> list:
    order = recurrence_rank_order(a.morse)
    vals = [a.table[c] for c in order]
    expected = [cantor_value(r, a.cantor_depth) for r in range(len(order))]
    return [i for i, (v, e) in enumerate(zip(vals, expected)) if v != e]


def map_level_set_violations(a: LyapunovAssignment) -> list:
    """Each recurrent value's preimage among boxes must be exactly its component."""
    bad = []
    for c, v in a.table.items():
        pre = set(np.nonzero(a.box_value == float(v))[0].tolist())
        if pre != set(a.morse.members[c].tolist()):
            bad.append(c)
    return bad
