"""Acceptance criteria, one test per criterion; each prints a PASS/FAIL line."""

import itertools
import math
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import builtin_config
from lyapgen.chainrec import (
    chain_recurrent_boxes,
    chain_transitive_components,
    epsilon_chain_oracle,
    strongly_connected_components,
)
from lyapgen.dynamics import CONTINUOUS, SemiflowSystem, flow
from lyapgen.grid import sample_all
from lyapgen.lyapunov_lift import LiftConfig, lift, lift_many, quadrature_tolerance
from lyapgen.pipeline import analyze
from lyapgen.transition import TransitionGraph, build_transition
from lyapgen.verification import check_shift_identity, deep_recurrent_samples, margin_transient_samples

ODE_BUILTINS = ("linear1d", "doublewell", "hopf")
SHIFTS = (0.25, 0.5, 0.75, 1.0)


def test_criterion_01_quadrature_fidelity(criterion):
    sys_ = SemiflowSystem.from_strings(CONTINUOUS, ["-x1"], [-2], [2], 1 / 256)
    t0 = time.perf_counter()
    value = lift(lambda p: p[:, 0] ** 2, sys_, [1.0], LiftConfig(256))
    elapsed = time.perf_counter() - t0
    err = abs(value - 0.4323324)
    ok = err <= 1e-3 and elapsed < 1.0
    assert criterion(1, ok, f"L={value:.7f} |L-0.4323324|={err:.2e} (<=1e-3), {elapsed:.3f}s (<1s)")


def _comps_near(an, points):
    """Each component lies within 2 widths of a distinct target point."""
    g = an.grid
    w = float(g.width.max())
    comps = chain_transitive_components(an.morse)
    hits = []
    for comp in comps:
        lo, hi = g.box_bounds(np.array(sorted(comp)))
        far = np.maximum(np.abs(lo[:, :, None] - points.T[None]), np.abs(hi[:, :, None] - points.T[None]))
        far = far.max(axis=1).max(axis=0)  # farthest box corner offset per target
        hits.append(np.nonzero(far <= 2 * w)[0].tolist())
    return comps, hits


def test_criterion_02_chain_recurrence_structure(criterion):
    t0 = time.perf_counter()
    dw = analyze(builtin_config("doublewell"))
    t_dw = time.perf_counter() - t0
    comps, hits = _comps_near(dw, np.array([[-1.0], [0.0], [1.0]]))
    dw_ok = len(comps) == 3 and sorted(h[0] for h in hits if len(h) == 1) == [0, 1, 2]

    t0 = time.perf_counter()
    hopf = analyze(builtin_config("hopf"))
    t_hopf = time.perf_counter() - t0
    g = hopf.grid
    hcomps = chain_transitive_components(hopf.morse)
    origin = int(g.locate_many(np.zeros((1, 2)))[0])
    th = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
    circle = set(g.locate_many(np.stack([np.cos(th), np.sin(th)], axis=1)).tolist())
    inner = [c for c in hcomps if origin in c]
    outer = [c for c in hcomps if origin not in c]
    hopf_ok = (
        len(hcomps) == 2
        and len(inner) == 1
        and np.all(np.linalg.norm(g.centers(sorted(inner[0])), axis=1) < 2 * g.width[0])
        and circle <= outer[0]
    )
    ok = dw_ok and hopf_ok and t_dw < 30 and t_hopf < 30
    assert criterion(
        2,
        ok,
        f"doublewell {len(comps)} components near -1,0,1 ({t_dw:.1f}s); "
        f"hopf {len(hcomps)} components, origin {len(inner[0]) if inner else 0} boxes, "
        f"annulus {len(outer[0]) if outer else 0} boxes covers circle ({t_hopf:.1f}s)",
    )


@pytest.mark.parametrize("name", ["linear1d", "doublewell"])
def test_criterion_03_requirement_one(name, analysis, criterion):
    an = analysis(name)
    cfg = LiftConfig(256)
    tol_q = quadrature_tolerance(an.assignment.value_range(), 256)
    deep = deep_recurrent_samples(an)
    L0 = lift_many(an.assignment, an.system, deep.points, cfg)
    const_viol = 0
    worst = 0.0
    for s in SHIFTS:
        Ls = lift_many(an.assignment, an.system, flow(an.system, deep.points, s), cfg)
        const_viol += int(np.sum(np.abs(Ls - L0) > tol_q))
        worst = max(worst, float(np.abs(Ls - L0).max()))
    trans = margin_transient_samples(an, np.random.default_rng(an.config.seed))
    Lx = lift_many(an.assignment, an.system, trans.points, cfg)
    L1 = lift_many(an.assignment, an.system, flow(an.system, trans.points, 1.0), cfg)
    dec_viol = int(np.sum(~(L1 < Lx)))
    ok = len(deep.points) >= 50 and const_viol == 0 and len(trans.points) >= 100 and dec_viol == 0
    assert criterion(
        3,
        ok,
        f"{name}: {len(deep.points)} deep samples, {const_viol} constancy violations "
        f"(max {worst:.1e} <= tol_q {tol_q:.2e}); {len(trans.points)} transient samples, "
        f"{dec_viol} non-decreases",
    )


def ternary(v: Fraction, count: int) -> list:
    out = []
    for _ in range(count):
        v *= 3
        d = v.numerator // v.denominator
        out.append(d)
        v -= d
    return out


@pytest.mark.parametrize("name", ["linear1d", "doublewell", "hopf", "halfmap"])
def test_criterion_04_cantor_digits(name, analysis, criterion):
    a = analysis(name).assignment
    D = a.cantor_depth
    bad = 0
    for c, v in enumerate(a.component_value):
        if a.morse.recurrent[c]:
            ok_c = (v * 3**D).denominator == 1 and set(ternary(v, D)) <= {0, 2}
        else:
            ok_c = ternary(v, D + 1)[D] == 1
        bad += not ok_c
    n_rec = len(a.table)
    n_tr = len(a.component_value) - n_rec
    assert criterion(
        4, bad == 0, f"{name}: D={D}, {n_rec} recurrent + {n_tr} transient values, {bad} digit violations"
    )


def _round(values, table):
    table = np.asarray(table)
    idx = np.abs(values[:, None] - table[None, :]).argmin(axis=1)
    half = np.diff(table).min() / 2 if len(table) > 1 else np.inf
    return table[idx], np.abs(values - table[idx]) < half


@pytest.mark.parametrize("name", ODE_BUILTINS)
def test_criterion_05_level_sets(name, analysis, criterion):
    an = analysis(name)
    a = an.assignment
    ids = np.nonzero(a.box_recurrent & ~a.box_exiting)[0]
    pts, owners = sample_all(an.grid, an.config.verify_k, ids)
    L = lift_many(a, an.system, pts, LiftConfig(256))
    table = sorted(float(v) for v in a.table.values())
    rounded, roundable = _round(L, table)
    by_value = {float(v): c for c, v in a.table.items()}
    predicted = np.array([by_value[v] for v in rounded])
    mism = int(np.sum(~roundable | (predicted != a.box_component[owners])))
    # the recovered partition must equal the component partition
    recovered = {c: set(owners[predicted == c].tolist()) for c in a.table}
    actual = {c: set(a.morse.members[c].tolist()) - set(np.nonzero(a.box_exiting)[0].tolist())
              for c in a.table}
    ok = mism == 0 and recovered == actual
    assert criterion(5, ok, f"{name}: {len(pts)} recurrent-box samples, {mism} misassigned")


def test_criterion_06_shift_identity(analysis, criterion):
    an = analysis("doublewell")
    res = check_shift_identity(an, np.random.default_rng(0), trials=20)
    m = res.measured
    ok = (
        m["max_discrepancy"] <= res.tolerance["bound"]
        and m["max_discrepancy_interpolated"] <= res.tolerance["bound"]
        and m["doubling_ratio"] >= 1.8
    )
    assert res.status == ("pass" if ok else "fail")
    assert criterion(
        6,
        ok,
        f"20 trials: max |lhs-rhs| {m['max_discrepancy']:.2e} (constant ell), "
        f"{m['max_discrepancy_interpolated']:.2e} (interpolated) <= {res.tolerance['bound']:.2e}; "
        f"N-doubling ratio {m['doubling_ratio']:.2f} >= 1.8",
    )


def _one_sided(grid, a, b):
    """sup over boxes of a of the distance to the nearest box of b, in widths (box centers)."""
    ca, cb = grid.centers(sorted(a)), grid.centers(sorted(b))
    d = np.abs(ca[:, None, :] - cb[None, :, :]).max(axis=2) / grid.width.max()
    return float(d.min(axis=1).max())


@pytest.mark.parametrize("name", ["linear1d", "doublewell"])
def test_criterion_07_time_scales(name, analysis, criterion):
    an = analysis(name)
    base = chain_recurrent_boxes(an.morse)
    worst = 0.0
    parts = []
    for T in (2.0, 0.5):
        g = build_transition(an.grid, an.system, an.config.samples, an.config.padding, time=T)
        other = chain_recurrent_boxes(strongly_connected_components(g))
        fwd, bwd = _one_sided(an.grid, base, other), _one_sided(an.grid, other, base)
        worst = max(worst, fwd, bwd)
        parts.append(f"T={T}: {fwd:.0f}/{bwd:.0f}")
    assert criterion(7, worst <= 1.0, f"{name}: one-sided Hausdorff in widths {', '.join(parts)} (<=1)")


def _oracle_agrees(n, edges):
    g = TransitionGraph.from_edges(n, edges)
    rec = chain_recurrent_boxes(strongly_connected_components(g))
    return all(epsilon_chain_oracle(g, b) == (b in rec) for b in range(n))


def test_criterion_08_oracle_equivalence(criterion):
    rng = np.random.default_rng(8)
    checked = bad = 0
    for n in range(1, 9):
        pairs = [(a, b) for a in range(n) for b in range(n)]
        if 2 ** len(pairs) <= 4096:
            masks = range(2 ** len(pairs))
        else:
            masks = (int.from_bytes(rng.bytes(8), "little") for _ in range(4096))
        for mask in masks:
            if isinstance(mask, int) and 2 ** len(pairs) > 4096:
                density = rng.uniform(0.05, 0.5)
                edges = [p for p in pairs if rng.random() < density]
            else:
                edges = [p for i, p in enumerate(pairs) if mask >> i & 1]
            checked += 1
            bad += not _oracle_agrees(n, edges)
    small = checked
    for _ in range(1000):
        m = int(rng.integers(64, 64 * 4))
        edges = rng.integers(0, 64, size=(m, 2)).tolist()
        checked += 1
        bad += not _oracle_agrees(64, edges)
    assert criterion(
        8, bad == 0, f"{small} graphs on <=8 nodes + 1000 on 64 nodes, {bad} disagreements"
    )


@pytest.mark.parametrize("name", ODE_BUILTINS)
def test_criterion_09_image_equality(name, analysis, criterion):
    an = analysis(name)
    a = an.assignment
    deep = deep_recurrent_samples(an)
    L = lift_many(a, an.system, deep.points, LiftConfig(256))
    rounded, roundable = _round(L, a.distinct_values())
    image = set(rounded[roundable].tolist())
    table = {float(v) for v in a.table.values()}
    ok = bool(roundable.all()) and image == table
    assert criterion(
        9, ok, f"{name}: {len(deep.points)} deep samples round to {len(image)} values, table has {len(table)}"
    )


def _run_analyze(cfg_path, out):
    proc = subprocess.run(
        [sys.executable, "-m", "lyapgen.cli", "analyze", str(cfg_path), "--out", str(out)],
        capture_output=True,
        text=True,
    )
    return proc.returncode, {p.name: p.read_bytes() for p in sorted(out.iterdir())}


@pytest.mark.parametrize(
    "name, extra", [("doublewell", ""), ("halfmap", ""), ("hopf", ', "depth": 4')]
)
def test_criterion_10_determinism(name, extra, tmp_path, criterion):
    cfg = tmp_path / "config.json"
    cfg.write_text(
        '{"schema_version": 1, "mode": "builtin", "builtin": "%s", "export_edges": true%s}'
        % (name, extra)
    )
    code1, files1 = _run_analyze(cfg, tmp_path / "run1")
    code2, files2 = _run_analyze(cfg, tmp_path / "run2")
    ok = code1 == code2 and files1 == files2 and len(files1) >= 5
    assert criterion(
        10, ok, f"{name}: exit {code1}/{code2}, {len(files1)} files byte-identical: {files1 == files2}"
    )
