"""Command line interface: ``lyapgen analyze|verify|orbit <config.json>``.

Exit codes: 0 all checks pass, 1 a verification check failed, 2 usage or
configuration error, 3 degenerate result (empty chain recurrent set).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .dynamics import EvaluationError, Orbit
from .export import fmt, write_artifacts, write_report
from .grid import GridError
from .lyapunov_lift import midpoint_rule, quadrature_tolerance
from .lyapunov_map import EmptyChainRecurrentSet
from .pipeline import analyze
from .verification import FAIL, run_checks

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DEGENERATE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _load(args):
    cfg = load_config(args.config)
    return cfg.with_overrides(
        depth=args.depth,
        samples=args.samples,
        padding=args.padding,
        quad_n=args.quad_n,
        output_dir=args.out,
    )


def _summary(an, report, out) -> None:
    md = report.metadata
    print(f"system {an.config.name} ({an.config.mode}, dimension {an.config.dimension})")
    print(
        f"boxes {md['boxes']}  edges {md['edges']}  exiting {md['exiting_boxes']}  "
        f"components {md['morse_components']}  recurrent {md['recurrent_components']}"
    )
    for cv in md["component_values"]:
        print(f"  C{cv['component']}: value {cv['exact']}  boxes {cv['boxes']}  layer {cv['layer']}")
    for c in report.checks:
        line = f"  {c.status:7s} {c.name}"
        if c.status == "skipped":
            line += f" ({c.detail})"
        print(line)
    s = report.to_dict()["summary"]
    print(f"passed {s['passed']}  failed {s['failed']}  skipped {s['skipped']}  -> {out}")


def cmd_analyze(args) -> int:
    cfg = _load(args)
    an = analyze(cfg)
    report = run_checks(an)
    out = Path(cfg.output_dir)
    write_artifacts(an, report, out)
    _summary(an, report, out)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_verify(args) -> int:
    cfg = _load(args)
    an = analyze(cfg)
    report = run_checks(an)
    out = Path(cfg.output_dir)
    write_report(report, out)
    _summary(an, report, out)
    for c in report.checks:
        if c.status == FAIL:
            print(f"FAILED {c.name}: measured {c.measured}, tolerance {c.tolerance}")
            if c.counterexample is not None:
                print(f"  counterexample {c.counterexample}")
    return EXIT_OK if report.ok else EXIT_FAIL


def _parse_point(text: str, dim: int) -> np.ndarray:
    try:
        x = np.array([float(v) for v in text.split(",")], dtype=np.float64)
    except ValueError as exc:
        raise UsageError(f"--x0: cannot parse {text!r} as comma-separated reals") from exc
    if len(x) != dim:
        raise UsageError(f"--x0: expected {dim} coordinates, got {len(x)}")
    return x


def cmd_orbit(args) -> int:
    cfg = _load(args)
    if not cfg.is_ode:
        raise UsageError("orbit needs an ode-mode system")
    x0 = _parse_point(args.x0, cfg.dimension)
    lo, hi = np.asarray(cfg.lower), np.asarray(cfg.upper)
    if np.any(x0 < lo) or np.any(x0 > hi):
        raise UsageError(f"--x0 {args.x0} lies outside the domain {list(map(list, cfg.domain))}")
    if args.T < 0:
        raise UsageError("--T must be non-negative")
    if args.every < 1:
        raise UsageError("--every must be at least 1")

    an = analyze(cfg)
    sys_ = an.system
    steps, t_used = sys_.snap_time(args.T)
    orbit = Orbit(sys_, x0[None, :], t_used + 1.0)
    rows = list(range(0, steps + 1, args.every))
    if rows[-1] != steps:
        rows.append(steps)
    times = np.array(rows) * sys_.step

    ell = an.ell
    lc = an.lift_config
    pts = orbit.states[rows, 0]
    ell_vals = ell(pts)
    # L(phi^t x0) is the average of ell over [t, t+1] on the same orbit
    L_vals = np.array([midpoint_rule(ell, orbit, t, 1.0, lc.n_quad)[0] for t in times])
    tol_q = quadrature_tolerance(an.assignment.value_range(), lc.n_quad)
    transient = not an.assignment.box_recurrent[an.grid.locate_many(x0[None, :])[0]]

    print(f"# system {cfg.name}, x0 = {','.join(fmt(v) for v in x0)}")
    if abs(t_used - args.T) > 0:
        print(f"# T = {fmt(args.T)} snapped to {fmt(t_used)} ({steps} steps of {fmt(sys_.step)})")
    else:
        print(f"# T = {fmt(t_used)} ({steps} steps of {fmt(sys_.step)})")
    print(f"# x0 box is {'transient' if transient else 'recurrent'}; tol_q = {fmt(tol_q)}")
    names = [f"x{j + 1}" for j in range(cfg.dimension)]
    print(",".join(["t"] + names + ["ell", "L", "flag"]))
    violations = 0
    for i, t in enumerate(times):
        flag = ""
        if transient and i > 0 and L_vals[i] > L_vals[i - 1] + tol_q:
            flag = "increase"
            violations += 1
        fields = [fmt(t)] + [fmt(v) for v in pts[i]] + [fmt(ell_vals[i]), fmt(L_vals[i]), flag]
        print(",".join(fields))
    if violations:
        print(f"# {violations} rows where L increased by more than tol_q")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="lyapgen",
        description="Complete Lyapunov functions for semiflows on a box grid.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="system configuration (JSON)")
        sp.add_argument("--depth", type=int, help="subdivision depth (2^depth boxes per axis)")
        sp.add_argument("--samples", type=int, help="sample points per box axis")
        sp.add_argument("--padding", type=float, help="image padding in box widths")
        sp.add_argument("--quad-n", dest="quad_n", type=int, help="midpoint-rule samples")
        sp.add_argument("--out", help="output directory")

    common(sub.add_parser("analyze", help="build everything, write artifacts and run checks"))
    common(sub.add_parser("verify", help="run the verification checks and write report.json"))
    orb = sub.add_parser("orbit", help="print ell and L along one orbit")
    common(orb)
    orb.add_argument("--x0", required=True, help="initial point, comma-separated")
    orb.add_argument("--T", type=float, required=True, help="final time")
    orb.add_argument("--every", type=int, default=16, help="print every n-th step (default 16)")
    return p


COMMANDS = {"analyze": cmd_analyze, "verify": cmd_verify, "orbit": cmd_orbit}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"lyapgen: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, GridError, OSError) as exc:
        print(f"lyapgen: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EvaluationError as exc:
        print(f"lyapgen: evaluation failed: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EmptyChainRecurrentSet as exc:
        print(f"lyapgen: empty chain recurrent set: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
