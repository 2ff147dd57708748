"""Lifting a map Lyapunov function to the semiflow by averaging along orbits.

``L(x)`` is the time average of ``ell`` over the orbit segment ``[0, 1]``,
approximated by the midpoint rule at times ``(j + 1/2)/N``. Orbits are
integrated once on the RK4 step grid; every quantity that samples an orbit
reads from that single integration.

``ell`` may be a :class:`LyapunovAssignment` or any callable mapping an
``(m, n)`` array of points to ``m`` values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import CONTINUOUS, Orbit, SemiflowSystem

DEFAULT_QUAD_N = 256


class LiftUndefined(ValueError):
    pass


@dataclass(frozen=True)
class LiftConfig:
    n_quad: int = DEFAULT_QUAD_N
    ell_mode: str = "constant"

    def __post_init__(self):
        if self.n_quad < 16:
            raise ValueError("need at least 16 quadrature samples")
        if self.ell_mode not in ("constant", "interpolated"):
            raise ValueError(f"unknown ell mode {self.ell_mode!r}")


def _check_system(sys: SemiflowSystem) -> None:
    if sys.mode != CONTINUOUS:
        raise LiftUndefined("lift undefined for maps")


def _ell_fn(ell, cfg: LiftConfig):
    with_mode = getattr(ell, "with_mode", None)
    return with_mode(cfg.ell_mode) if with_mode is not None else ell


def midpoint_times(start, length, n: int) -> np.ndarray:
    """Midpoints of n equal cells; shape (n,) or (n, m) for per-point start/length."""
    frac = (np.arange(n) + 0.5) / n
    if np.ndim(start) == 0 and np.ndim(length) == 0:
        return start + frac * length
    return np.asarray(start)[None, :] + frac[:, None] * np.asarray(length)[None, :]


def sample_ell(ell, orbit: Orbit, times) -> np.ndarray:
    """ell along the orbit; shape (T, m)."""
    states = orbit.at(times)
    flat = states.reshape(-1, states.shape[-1])
    return np.asarray(ell(flat), dtype=np.float64).reshape(states.shape[:2])


def midpoint_rule(ell, orbit: Orbit, start, length, n: int) -> np.ndarray:
    """Midpoint approximation of the integral of ell along the orbit over [start, start+length].

    ``start`` and ``length`` may be scalars or per-point arrays.
    """
    length = np.broadcast_to(np.asarray(length, dtype=np.float64), (orbit.n_points,))
    start = np.broadcast_to(np.asarray(start, dtype=np.float64), (orbit.n_points,))
    vals = sample_ell(ell, orbit, midpoint_times(start, length, n))
    # correctly rounded sums: results do not depend on how points are batched
    sums = np.array([math.fsum(col) for col in vals.T])
    return sums / n * length


def lift_many(ell, sys: SemiflowSystem, points, cfg: LiftConfig = LiftConfig()) -> np.ndarray:
    _check_system(sys)
    fn = _ell_fn(ell, cfg)
    orbit = Orbit(sys, np.atleast_2d(points), 1.0)
    return midpoint_rule(fn, orbit, 0.0, 1.0, cfg.n_quad)


def lift(ell, sys: SemiflowSystem, x, cfg: LiftConfig = LiftConfig()) -> float:
    """L(x): average of ell over the orbit of x on [0, 1]."""
    return float(lift_many(ell, sys, np.asarray(x, dtype=np.float64).reshape(1, -1), cfg)[0])


def _check_aligned(sys: SemiflowSystem, shifts: np.ndarray) -> None:
    if np.any(shifts <= 0) or np.any(shifts > 1):
        raise ValueError("shifts must lie in (0, 1]")
    steps = shifts / sys.step
    if np.any(np.abs(steps - np.round(steps)) > 1e-9):
        raise ValueError(f"shifts must be multiples of the step {sys.step}")


def shift_decomposition_many(ell, sys, points, shifts, cfg: LiftConfig = LiftConfig()):
    """Batch version of :func:`shift_decomposition` with one shift per point (or a shared one).

    Returns three arrays (lhs, rhs1, rhs2).
    """
    _check_system(sys)
    fn = _ell_fn(ell, cfg)
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    s = np.broadcast_to(np.asarray(shifts, dtype=np.float64), (len(pts),))
    _check_aligned(sys, s)
    orbit = Orbit(sys, pts, 1.0 + float(s.max()))
    # phi^s x is a grid state of this orbit, so its own lift samples the same points
    lhs = midpoint_rule(fn, orbit, s, 1.0, cfg.n_quad)
    rhs1 = midpoint_rule(fn, orbit, s, 1.0 - s, cfg.n_quad)
    # ell(phi^1(phi^t x)) is ell at time 1 + t of the same orbit
    rhs2 = midpoint_rule(fn, orbit, 1.0, s, cfg.n_quad)
    return lhs, rhs1, rhs2


def shift_decomposition(ell, sys, x, s: float, cfg: LiftConfig = LiftConfig()):
    """(L(phi^s x), integral over [s, 1] of ell(phi^t x), integral over [0, s] of ell(phi^1 phi^t x)).

    Each integral uses its own N-point midpoint rule, so the discrepancy in
    lhs = rhs1 + rhs2 is pure quadrature error.
    """
    lhs, r1, r2 = shift_decomposition_many(ell, sys, np.reshape(x, (1, -1)), s, cfg)
    return float(lhs[0]), float(r1[0]), float(r2[0])


@dataclass(frozen=True)
class ProbeResult:
    modulus: float
    worst_point: np.ndarray
    center_value: float


def continuity_probe(
    ell,
    sys: SemiflowSystem,
    x,
    radius: float,
    n_samples: int,
    cfg: LiftConfig = LiftConfig(),
    seed: int = 0,
) -> ProbeResult:
    """Largest |L(y) - L(x)| over points y drawn uniformly from the radius-ball around x."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    rng = np.random.default_rng(seed)
    n = len(x)
    direction = rng.standard_normal((n_samples, n))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    r = radius * rng.random(n_samples) ** (1.0 / n)
    ys = np.clip(x + direction * r[:, None], sys.lower, sys.upper)
    vals = lift_many(ell, sys, np.vstack([x, ys]), cfg)
    diffs = np.abs(vals[1:] - vals[0])
    i = int(np.argmax(diffs))
    return ProbeResult(float(diffs[i]), ys[i], float(vals[0]))


def quadrature_tolerance(ell_range: float, n_quad: int) -> float:
    return 4.0 * ell_range / n_quad
