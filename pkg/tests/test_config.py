import json

import pytest

from lyapgen.config import BUILTINS, ConfigError, config_from_dict, parse_config


def doc(**fields):
    base = {"schema_version": 1, "mode": "ode", "rhs": ["-x1"], "domain": [[-1, 1]], "depth": 6}
    base.update(fields)
    return base


def test_minimal_ode():
    cfg = config_from_dict(doc())
    assert cfg.dimension == 1 and cfg.exprs == ("-x1",)
    assert cfg.lower == (-1.0,) and cfg.upper == (1.0,)
    assert cfg.system().dim == 1


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtins_resolve(name):
    cfg = config_from_dict({"schema_version": 1, "mode": "builtin", "builtin": name})
    assert cfg.name == name
    assert cfg.mode in ("ode", "map")
    assert len(cfg.exprs) == cfg.dimension


def test_builtin_fields_overridable():
    cfg = config_from_dict({"schema_version": 1, "mode": "builtin", "builtin": "hopf", "depth": 4})
    assert cfg.depth == 4 and cfg.dimension == 2


def test_unknown_builtin():
    with pytest.raises(ConfigError, match="builtin"):
        config_from_dict({"schema_version": 1, "mode": "builtin", "builtin": "lorenz"})


def test_schema_version_required():
    d = doc()
    del d["schema_version"]
    with pytest.raises(ConfigError):
        config_from_dict(d)


def test_wrong_type_names_field():
    with pytest.raises(ConfigError) as exc:
        config_from_dict(doc(depth="eight"))
    assert exc.value.where == "field 'depth'"


def test_unknown_field_rejected():
    with pytest.raises(ConfigError):
        config_from_dict(doc(colour="blue"))


def test_expression_count_must_match_dimension():
    with pytest.raises(ConfigError, match="rhs"):
        config_from_dict(doc(dimension=2, domain=[[-1, 1], [-1, 1]]))


def test_malformed_expression_cites_offset():
    with pytest.raises(ConfigError) as exc:
        config_from_dict(doc(rhs=["x1 +* 2"]))
    assert exc.value.where == "field 'rhs/0'"
    assert "offset 4" in str(exc.value)


def test_time_dependent_expression_rejected():
    with pytest.raises(ConfigError, match="autonomous"):
        config_from_dict(doc(rhs=["t*x1"]))


def test_map_needs_update():
    with pytest.raises(ConfigError, match="update"):
        config_from_dict(doc(mode="map"))


def test_json_error_reports_line():
    text = '{\n  "schema_version": 1,\n  "mode": "ode"\n  "rhs": []\n}'
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.where.startswith("line 4")


def test_overrides_validated():
    cfg = config_from_dict(doc())
    assert cfg.with_overrides(depth=9, padding=None).depth == 9
    with pytest.raises(ConfigError):
        cfg.with_overrides(samples=1)


def test_defaults_by_dimension():
    one = config_from_dict(doc())
    two = config_from_dict(doc(rhs=["-x1", "-x2"], domain=[[-1, 1], [-1, 1]]))
    assert (one.resolution, one.verify_k) == (512, 32)
    assert (two.resolution, two.verify_k) == (128, 4)


def test_round_trip_through_dict():
    cfg = config_from_dict(doc(padding=0.3, seed=7))
    again = parse_config(json.dumps(cfg.to_dict()))
    assert again.to_dict() == cfg.to_dict()
