import numpy as np
import pytest

from lyapgen.grid import GridError, build_grid, locate, sample_all, sample_offsets, sample_points


def test_one_dimensional_grid():
    g = build_grid([-2], [2], 3)
    assert g.n_boxes == 8
    np.testing.assert_array_equal(g.width, [0.5])


def test_two_dimensional_grid():
    g = build_grid([0, 0], [1, 1], 2)
    assert g.n_boxes == 16
    np.testing.assert_array_equal(g.width, [0.25, 0.25])


@pytest.mark.parametrize("depth", [0, 17, 2.5])
def test_bad_depth_rejected(depth):
    with pytest.raises(GridError):
        build_grid([0], [1], depth)


def test_box_cap():
    with pytest.raises(GridError):
        build_grid([0, 0], [1, 1], 10, max_boxes=1000)


def test_empty_interval_rejected():
    with pytest.raises(GridError):
        build_grid([1], [1], 3)


def test_locate():
    g = build_grid([-2], [2], 3)
    assert locate(g, [0.1]) == 4
    lo, hi = g.box_bounds(4)
    assert lo[0] == 0.0 and hi[0] == 0.5
    assert locate(g, [2.0]) == 7
    assert locate(g, [-2.0]) == 0


def test_row_major_ids():
    g = build_grid([0, 0], [1, 1], 2)
    assert locate(g, [0.1, 0.6]) == 0 * 4 + 2
    assert locate(g, [0.6, 0.1]) == 2 * 4 + 0
    np.testing.assert_array_equal(g.coords(9), [2, 1])
    assert g.ids([2, 1]) == 9


def test_centers_locate_to_themselves():
    g = build_grid([-1, 0], [1, 3], 3)
    ids = np.arange(g.n_boxes)
    np.testing.assert_array_equal(g.locate_many(g.centers()), ids)


def test_samples_in_half_box():
    g = build_grid([0], [1], 1)
    pts = sample_points(g, 0, 2)[:, 0]
    np.testing.assert_allclose(pts[:2], [0.125, 0.375])
    assert len(pts) == 4
    assert 0 < pts[2] < 1e-8 and 0.5 - 1e-8 < pts[3] < 0.5


def test_sample_counts():
    assert len(sample_offsets(1, 3)) == 5
    assert len(sample_offsets(2, 2)) == 8
    with pytest.raises(GridError):
        sample_offsets(1, 1)


def test_samples_stay_in_owner_box():
    g = build_grid([-2, -2], [2, 2], 3)
    pts, owners = sample_all(g, 3)
    assert len(pts) == g.n_boxes * (9 + 4)
    np.testing.assert_array_equal(g.locate_many(pts), owners)


def test_sample_all_matches_sample_points():
    g = build_grid([-2], [2], 4)
    pts, owners = sample_all(g, 3, [5, 9])
    np.testing.assert_array_equal(pts[owners == 9], sample_points(g, 9, 3))
