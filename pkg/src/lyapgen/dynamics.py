"""Semiflows given by vector fields (fixed-step RK4) and discrete maps.

Points are handled in batches: an array of shape ``(m, n)`` holds ``m``
points of an ``n``-dimensional system. Single points of shape ``(n,)`` are
accepted everywhere and returned with the same shape.

Trajectories that leave the domain rectangle are clamped back onto it
after every step and flagged as exiting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exprparse import EvaluationError, compile_expr, parse_expression, variables

CONTINUOUS = "continuous"
DISCRETE = "discrete"

DEFAULT_STEP = 1.0 / 256


class IntegrationError(EvaluationError):
    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step


@dataclass(frozen=True)
class SemiflowSystem:
    """A continuous-time semiflow or a discrete map on a compact rectangle."""

    mode: str
    exprs: tuple
    lower: tuple
    upper: tuple
    step: float = DEFAULT_STEP
    sources: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.mode not in (CONTINUOUS, DISCRETE):
            raise ValueError(f"unknown mode {self.mode!r}")
        n = len(self.exprs)
        if n == 0 or len(self.lower) != n or len(self.upper) != n:
            raise ValueError("expression count and domain dimension must agree")
        for a, b in zip(self.lower, self.upper):
            if not a < b:
                raise ValueError(f"empty domain interval [{a}, {b}]")
        for e in self.exprs:
            if "t" in variables(e):
                raise ValueError("expressions must be autonomous (no 't')")
        if self.mode == CONTINUOUS:
            if not self.step > 0:
                raise ValueError("integrator step must be positive")
            inv = 1.0 / self.step
            if abs(inv - round(inv)) > 1e-9 * inv:
                raise ValueError("1/step must be an integer")

    @classmethod
    def from_strings(cls, mode, sources, lower, upper, step=DEFAULT_STEP):
        n = len(sources)
        exprs = tuple(parse_expression(s, n) for s in sources)
        return cls(
            mode,
            exprs,
            tuple(float(a) for a in lower),
            tuple(float(b) for b in upper),
            float(step),
            tuple(sources),
        )

    @property
    def dim(self) -> int:
        return len(self.exprs)

    @property
    def steps_per_unit(self) -> int:
        return int(round(1.0 / self.step))

    def _lo_hi(self):
        return np.asarray(self.lower), np.asarray(self.upper)

    def field(self, X: np.ndarray) -> np.ndarray:
        """Evaluate the expressions on a batch of points, shape (m, n)."""
        env = {f"x{i + 1}": X[:, i] for i in range(self.dim)}
        out = np.empty_like(X)
        with np.errstate(all="ignore"):
            for i, fn in enumerate(self._compiled):
                out[:, i] = fn(env)
        return out

    @property
    def _compiled(self):
        return [compile_expr(e) for e in self.exprs]

    def rk4_step(self, X: np.ndarray, h: float) -> np.ndarray:
        k1 = self.field(X)
        k2 = self.field(X + (0.5 * h) * k1)
        k3 = self.field(X + (0.5 * h) * k2)
        k4 = self.field(X + h * k3)
        return X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def clamp(self, X: np.ndarray):
        lo, hi = self._lo_hi()
        Y = np.clip(X, lo, hi)
        exited = np.any(Y != X, axis=1)
        return Y, exited

    def snap_time(self, t: float):
        """Number of RK4 steps for time ``t`` and the step-aligned time actually used."""
        if t < 0:
            raise ValueError("semiflows run forward in time only")
        steps = int(round(t / self.step))
        return steps, steps * self.step

    def advance(self, X: np.ndarray, steps: int, start_step: int = 0):
        """Take ``steps`` RK4 steps from the batch X; returns (points, exited)."""
        X = np.array(X, dtype=np.float64)
        exited = np.zeros(len(X), dtype=bool)
        for k in range(steps):
            X = self.rk4_step(X, self.step)
            if np.isnan(X).any():
                raise IntegrationError("vector field evaluation failed", start_step + k)
            X, ex = self.clamp(X)
            exited |= ex
        return X, exited

    def apply_map(self, X: np.ndarray):
        X = np.array(X, dtype=np.float64)
        Y = self.field(X)
        if np.isnan(Y).any():
            raise IntegrationError("map evaluation failed", 0)
        return self.clamp(Y)


def _as_batch(x):
    arr = np.asarray(x, dtype=np.float64)
    return arr.reshape(1, -1) if arr.ndim == 1 else arr, arr.ndim == 1


def flow_with_status(sys: SemiflowSystem, x, t: float):
    """Return (phi^t(x), exited flags, snapped time)."""
    if sys.mode != CONTINUOUS:
        raise ValueError("flow is defined for continuous-mode systems only")
    X, single = _as_batch(x)
    steps, t_used = sys.snap_time(t)
    Y, exited = sys.advance(X, steps)
    if single:
        return Y[0], bool(exited[0]), t_used
    return Y, exited, t_used


def flow(sys: SemiflowSystem, x, t: float) -> np.ndarray:
    """phi^t(x) by fixed-step RK4; t is snapped to a multiple of the step."""
    return flow_with_status(sys, x, t)[0]


def time_map_with_status(sys: SemiflowSystem, x, time: float = 1.0):
    """phi^time for a semiflow, or one application of a discrete map."""
    X, single = _as_batch(x)
    if sys.mode == DISCRETE:
        if time != 1.0:
            raise ValueError("discrete maps have only integer time one")
        Y, exited = sys.apply_map(X)
    else:
        steps, _ = sys.snap_time(time)
        Y, exited = sys.advance(X, steps)
    if single:
        return Y[0], bool(exited[0])
    return Y, exited


def time_one_map(sys: SemiflowSystem, x) -> np.ndarray:
    return time_map_with_status(sys, x, 1.0)[0]


class Orbit:
    """A batch of trajectories integrated once on the step grid over [0, T].

    Values at off-grid times are obtained with a single partial RK4 step
    from the preceding grid state, so sampling at grid times reproduces
    :func:`flow` bit for bit.
    """

    def __init__(self, sys: SemiflowSystem, x, horizon: float):
        if sys.mode != CONTINUOUS:
            raise ValueError("orbits need a continuous-mode system")
        X, self.single = _as_batch(x)
        self.sys = sys
        n_steps, self.horizon = sys.snap_time(horizon)
        states = np.empty((n_steps + 1,) + X.shape)
        states[0] = X
        exited = np.zeros(len(X), dtype=bool)
        cur = X
        for k in range(n_steps):
            cur, ex = sys.advance(cur, 1, start_step=k)
            exited |= ex
            states[k + 1] = cur
        self.states = states
        self.exited = exited

    @property
    def n_points(self) -> int:
        return self.states.shape[1]

    def at(self, times) -> np.ndarray:
        """States at the given times, shape (T, m, n).

        ``times`` is either shared by all points, shape (T,), or given per
        point, shape (T, m).
        """
        times = np.asarray(times, dtype=np.float64)
        m, n = self.states.shape[1:]
        if times.ndim == 1:
            times = np.broadcast_to(times[:, None], (len(times), m))
        if times.size and (times.min() < 0 or times.max() > self.horizon + 1e-12):
            raise ValueError(f"sample times outside orbit horizon {self.horizon}")
        h = self.sys.step
        last = len(self.states) - 1
        k = np.minimum(np.floor(times / h + 1e-9).astype(np.int64), last)
        rem = times - k * h
        out = self.states[k, np.arange(m)[None, :]]
        partial = np.abs(rem) > 1e-12 * np.maximum(1.0, times)
        if partial.any():
            hs = rem[partial][:, None]
            out[partial] = self.sys.clamp(self.sys.rk4_step(out[partial], hs))[0]
        return out
