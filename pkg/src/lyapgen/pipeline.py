"""End-to-end construction: grid, transition graph, Morse graph, assignment."""

from __future__ import annotations

from dataclasses import dataclass

from .chainrec import MorseGraph, strongly_connected_components
from .config import SystemConfig
from .dynamics import SemiflowSystem
from .grid import BoxGrid, build_grid
from .lyapunov_lift import LiftConfig
from .lyapunov_map import LyapunovAssignment, build_assignment
from .transition import TransitionGraph, build_transition


@dataclass(frozen=True)
class Analysis:
    config: SystemConfig
    system: SemiflowSystem
    grid: BoxGrid
    graph: TransitionGraph
    morse: MorseGraph
    assignment: LyapunovAssignment

    @property
    def lift_config(self) -> LiftConfig:
        return LiftConfig(self.config.quad_n, self.config.ell_mode)

    @property
    def ell(self) -> LyapunovAssignment:
        return self.assignment.with_mode(self.config.ell_mode)


def analyze(cfg: SystemConfig) -> Analysis:
    """Raises EmptyChainRecurrentSet when no recurrent component is found."""
    system = cfg.system()
    grid = build_grid(cfg.lower, cfg.upper, cfg.depth)
    graph = build_transition(grid, system, cfg.samples, cfg.padding)
    morse = strongly_connected_components(graph)
    assignment = build_assignment(morse, grid)
    return Analysis(cfg, system, grid, graph, morse, assignment)
