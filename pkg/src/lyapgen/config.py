"""System configuration files (JSON, ``schema_version`` 1) and builtin systems."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources

import jsonschema

from .dynamics import CONTINUOUS, DEFAULT_STEP, DISCRETE, SemiflowSystem
from .exprparse import ExprSyntaxError, parse_expression, variables
from .lyapunov_lift import DEFAULT_QUAD_N
from .transition import DEFAULT_PADDING, DEFAULT_SAMPLES

BUILTINS = {
    "linear1d": {
        "mode": "ode",
        "rhs": ["-x1"],
        "domain": [[-1.0, 1.0]],
        "depth": 8,
    },
    "doublewell": {
        "mode": "ode",
        "rhs": ["x1 - x1^3"],
        "domain": [[-2.0, 2.0]],
        "depth": 8,
    },
    "hopf": {
        "mode": "ode",
        "rhs": [
            "-x2 + x1*(1 - x1^2 - x2^2)",
            "x1 + x2*(1 - x1^2 - x2^2)",
        ],
        "domain": [[-2.0, 2.0], [-2.0, 2.0]],
        "depth": 6,
    },
    "halfmap": {
        "mode": "map",
        "update": ["x1/2"],
        "domain": [[-1.0, 1.0]],
        "depth": 8,
    },
}


class ConfigError(ValueError):
    """Invalid configuration; ``where`` names the line or field at fault."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass(frozen=True)
class SystemConfig:
    name: str
    mode: str  # "ode" or "map" after builtin resolution
    dimension: int
    exprs: tuple
    domain: tuple
    depth: int
    samples: int = DEFAULT_SAMPLES
    padding: float = DEFAULT_PADDING
    step: float = DEFAULT_STEP
    quad_n: int = DEFAULT_QUAD_N
    ell_mode: str = "constant"
    eval_resolution: int = 0  # 0: pick from dimension
    verify_samples: int = 0  # 0: pick from dimension
    max_transient_samples: int = 2000
    seed: int = 0
    export_edges: bool = False
    output_dir: str = "lyapgen_out"

    @property
    def is_ode(self) -> bool:
        return self.mode == "ode"

    @property
    def resolution(self) -> int:
        return self.eval_resolution or (512 if self.dimension == 1 else 128)

    @property
    def verify_k(self) -> int:
        return self.verify_samples or (32 if self.dimension == 1 else 4)

    @property
    def lower(self) -> tuple:
        return tuple(a for a, _ in self.domain)

    @property
    def upper(self) -> tuple:
        return tuple(b for _, b in self.domain)

    def system(self) -> SemiflowSystem:
        mode = CONTINUOUS if self.is_ode else DISCRETE
        return SemiflowSystem.from_strings(mode, self.exprs, self.lower, self.upper, self.step)

    def with_overrides(self, **overrides) -> "SystemConfig":
        overrides = {k: v for k, v in overrides.items() if v is not None}
        cfg = replace(self, **overrides)
        _check_semantics(cfg)
        return cfg

    def to_dict(self) -> dict:
        key = "rhs" if self.is_ode else "update"
        return {
            "schema_version": 1,
            "name": self.name,
            "mode": self.mode,
            "dimension": self.dimension,
            key: list(self.exprs),
            "domain": [list(d) for d in self.domain],
            "depth": self.depth,
            "samples": self.samples,
            "padding": self.padding,
            "step": self.step,
            "quad_n": self.quad_n,
            "ell_mode": self.ell_mode,
            "eval_resolution": self.resolution,
            "verify_samples": self.verify_k,
            "max_transient_samples": self.max_transient_samples,
            "seed": self.seed,
        }


def _schema() -> dict:
    text = resources.files("lyapgen").joinpath("schemas/config.schema.json").read_text()
    return json.loads(text)


def parse_config(text: str) -> SystemConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from exc
    return config_from_dict(doc)


def load_config(path) -> SystemConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_from_dict(doc) -> SystemConfig:
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"field '{path}'", err.message)

    doc = dict(doc)
    if doc["mode"] == "builtin":
        if "builtin" not in doc:
            raise ConfigError("field 'builtin'", "required when mode is 'builtin'")
        base = dict(BUILTINS[doc["builtin"]])
        base["name"] = doc["builtin"]
        for key, value in doc.items():
            if key not in ("mode", "builtin"):
                base[key] = value
        doc = base

    key = "rhs" if doc["mode"] == "ode" else "update"
    other = "update" if key == "rhs" else "rhs"
    if key not in doc:
        raise ConfigError(f"field '{key}'", f"required in {doc['mode']} mode")
    if other in doc:
        raise ConfigError(f"field '{other}'", f"not allowed in {doc['mode']} mode")
    for required in ("domain", "depth"):
        if required not in doc:
            raise ConfigError(f"field '{required}'", "required")
    exprs = tuple(doc[key])
    dimension = doc.get("dimension", len(exprs))

    cfg = SystemConfig(
        name=doc.get("name", "system"),
        mode=doc["mode"],
        dimension=dimension,
        exprs=exprs,
        domain=tuple((float(a), float(b)) for a, b in doc["domain"]),
        depth=doc["depth"],
        **{
            k: doc[k]
            for k in (
                "samples",
                "padding",
                "step",
                "quad_n",
                "ell_mode",
                "eval_resolution",
                "verify_samples",
                "max_transient_samples",
                "seed",
                "export_edges",
                "output_dir",
            )
            if k in doc
        },
    )
    _check_semantics(cfg)
    return cfg


def _check_semantics(cfg: SystemConfig) -> None:
    key = "rhs" if cfg.is_ode else "update"
    if len(cfg.exprs) != cfg.dimension:
        raise ConfigError(
            f"field '{key}'", f"{len(cfg.exprs)} expressions for dimension {cfg.dimension}"
        )
    if len(cfg.domain) != cfg.dimension:
        raise ConfigError("field 'domain'", f"expected {cfg.dimension} intervals")
    for i, (a, b) in enumerate(cfg.domain):
        if not a < b:
            raise ConfigError(f"field 'domain/{i}'", "need lower < upper")
    if not 1 <= cfg.depth <= 16:
        raise ConfigError("field 'depth'", "must lie in [1, 16]")
    if cfg.samples < 2:
        raise ConfigError("field 'samples'", "must be at least 2")
    if cfg.padding < 0:
        raise ConfigError("field 'padding'", "must be non-negative")
    if cfg.quad_n < 16:
        raise ConfigError("field 'quad_n'", "must be at least 16")
    inv = 1.0 / cfg.step
    if abs(inv - round(inv)) > 1e-9 * inv:
        raise ConfigError("field 'step'", "1/step must be an integer")
    for i, src in enumerate(cfg.exprs):
        try:
            expr = parse_expression(src, cfg.dimension)
        except ExprSyntaxError as exc:
            raise ConfigError(f"field '{key}/{i}'", str(exc)) from exc
        if "t" in variables(expr):
            raise ConfigError(f"field '{key}/{i}'", "expressions must be autonomous (no 't')")
