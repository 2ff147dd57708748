import math

import numpy as np
import pytest

from lyapgen.dynamics import (
    CONTINUOUS,
    DISCRETE,
    IntegrationError,
    Orbit,
    SemiflowSystem,
    flow,
    flow_with_status,
    time_map_with_status,
    time_one_map,
)


def ode(srcs, lo, hi, step=1 / 256):
    return SemiflowSystem.from_strings(CONTINUOUS, srcs, lo, hi, step)


def dmap(srcs, lo, hi):
    return SemiflowSystem.from_strings(DISCRETE, srcs, lo, hi)


DECAY = ode(["-x1"], [-2], [2])
DOUBLEWELL = ode(["x1 - x1^3"], [-2], [2])
HOPF = ode(["-x2 + x1*(1 - x1^2 - x2^2)", "x1 + x2*(1 - x1^2 - x2^2)"], [-2, -2], [2, 2])


def test_decay_matches_exponential():
    assert abs(flow(DECAY, [1.0], 1.0)[0] - math.exp(-1)) <= 1e-6
    assert abs(time_one_map(DECAY, [1.0])[0] - math.exp(-1)) <= 1e-6


def test_time_zero_is_identity():
    x = np.array([0.123456789, -1.5])
    np.testing.assert_array_equal(flow(HOPF, x, 0.0), x)


@pytest.mark.parametrize("sys_", [DECAY, DOUBLEWELL, HOPF])
def test_semigroup_bit_exact(sys_):
    x = np.full(sys_.dim, 0.37)
    a = flow(sys_, flow(sys_, x, 0.25), 0.75)
    b = flow(sys_, x, 1.0)
    assert np.array_equal(a, b)


def test_rk4_fourth_order():
    errs = []
    for h in (1 / 8, 1 / 16, 1 / 32):
        s = ode(["-x1"], [-2], [2], step=h)
        errs.append(abs(flow(s, [1.0], 1.0)[0] - math.exp(-1)))
    assert errs[0] / errs[1] >= 12
    assert errs[1] / errs[2] >= 12


def test_halving_map():
    s = dmap(["x1/2"], [-1], [1])
    assert time_one_map(s, [0.8])[0] == 0.4


def test_identity_map():
    s = dmap(["x1", "x2"], [0, 0], [1, 1])
    x = np.array([0.3, 0.9])
    np.testing.assert_array_equal(time_one_map(s, x), x)


def test_time_snapped_and_reported():
    y, exited, t_used = flow_with_status(DECAY, [1.0], 0.3)
    assert t_used == round(0.3 * 256) / 256
    assert not exited
    np.testing.assert_array_equal(y, flow(DECAY, [1.0], t_used))


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        flow(DECAY, [1.0], -0.5)


def test_exiting_orbits_are_clamped_and_flagged():
    s = ode(["1"], [0], [1])
    y, exited = time_map_with_status(s, [0.5])
    assert y[0] == 1.0 and exited
    y, exited = time_map_with_status(s, [0.0], time=0.25)
    assert abs(y[0] - 0.25) < 1e-12 and not exited


def test_batch_matches_single_points():
    X = np.array([[0.1, 0.2], [1.5, -0.3], [-1.0, 1.0]])
    batch = flow(HOPF, X, 0.5)
    for x, yb in zip(X, batch):
        assert np.array_equal(flow(HOPF, x, 0.5), yb)


def test_evaluation_failure_reports_step():
    s = ode(["1/x1"], [-1], [1])
    with pytest.raises(IntegrationError) as exc:
        flow(s, [0.0], 1.0)
    assert exc.value.step == 0


def test_time_dependent_rhs_rejected():
    with pytest.raises(ValueError):
        ode(["t - x1"], [-1], [1])


def test_step_must_divide_unit_time():
    with pytest.raises(ValueError):
        ode(["-x1"], [-1], [1], step=0.3)


def test_orbit_grid_states_match_flow():
    x = np.array([[0.5], [-1.7]])
    orbit = Orbit(DOUBLEWELL, x, 2.0)
    for t in (0.0, 0.25, 1.0, 2.0):
        np.testing.assert_array_equal(orbit.at([t])[0], flow(DOUBLEWELL, x, t))


def test_orbit_off_grid_times_are_accurate():
    orbit = Orbit(DECAY, [[1.0]], 1.0)
    ts = np.array([0.1, 0.3333, 0.77])
    got = orbit.at(ts)[:, 0, 0]
    np.testing.assert_allclose(got, np.exp(-ts), atol=1e-10)


def test_orbit_per_point_times():
    X = np.array([[1.0], [0.5]])
    orbit = Orbit(DECAY, X, 1.0)
    times = np.array([[0.25, 0.5], [0.6, 0.1]])
    got = orbit.at(times)[..., 0]
    np.testing.assert_allclose(got, X[:, 0][None, :] * np.exp(-times), atol=1e-10)


def test_orbit_rejects_times_past_horizon():
    orbit = Orbit(DECAY, [[1.0]], 1.0)
    with pytest.raises(ValueError):
        orbit.at([1.5])
