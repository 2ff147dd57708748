import functools

import pytest

from lyapgen.config import config_from_dict
from lyapgen.pipeline import analyze
from lyapgen.verification import run_checks


def builtin_config(name, **fields):
    return config_from_dict({"schema_version": 1, "mode": "builtin", "builtin": name, **fields})


@functools.lru_cache(maxsize=None)
def _analysis(name):
    return analyze(builtin_config(name))


@functools.lru_cache(maxsize=None)
def _report(name):
    return run_checks(_analysis(name))


@pytest.fixture(scope="session")
def analysis():
    """analysis("doublewell") -> cached Analysis of a builtin at its default settings."""
    return _analysis


@pytest.fixture(scope="session")
def report():
    return _report


_CRITERIA = {}


@pytest.fixture(scope="session")
def criterion():
    """record(n, ok, detail): print and remember one acceptance line."""

    def record(n, ok, detail):
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _CRITERIA.setdefault(n, []).append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        for line in _CRITERIA[n]:
            terminalreporter.write_line(line)
