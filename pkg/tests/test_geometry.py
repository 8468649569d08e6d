from src.geometry.Polytope import (HalfSpace, Polytope, box_polytope, clip_to_box, facet_distance_sandwich,
                                  max_facet_distance, project_onto_polytope, random_polytope,
                                  signed_distance)
from src.geometry.CellCover import CellCover, cover_to_dict, load_cover, locate_cells, validate_cover
from src.utils.errors import BadWitness, ConfigError, InteriorPoint
from shapely.geometry import Point, Polygon, box
import numpy as np
import json
import pytest

from hypothesis import given, settings
from hypothesis import strategies as st


def unit_square():
    return box_polytope([0.0, 0.0], [1.0, 1.0])


def split_cover():
    lo, hi = [-1.0, -1.0], [1.0, 1.0]
    left = clip_to_box([HalfSpace([-1.0, 0.0], 0.0)], lo, hi, [-0.5, 0.0])
    right = clip_to_box([HalfSpace([1.0, 0.0], 0.0)], lo, hi, [0.5, 0.0])
    return CellCover([left, right], lo, hi)


@pytest.mark.parametrize("H, x, expected", [
    (HalfSpace([1.0, 0.0], 0.0), [2.0, 0.0], -2.0),
    (HalfSpace([1.0, 0.0], 0.0), [-1.0, 3.0], 1.0),
    (HalfSpace([1.0, 1.0], np.sqrt(2.0)), [0.0, 0.0], 1.0),
])
def test_signed_distance(H, x, expected):
    assert signed_distance(x, H) == pytest.approx(expected, abs=1e-12)


def test_halfspace_normalized():
    H = HalfSpace([3.0, 4.0], 10.0)
    assert np.linalg.norm(H.a) == pytest.approx(1.0, abs=1e-12)
    assert H.b == pytest.approx(2.0)


def test_bad_witness():
    with pytest.raises(BadWitness):
        Polytope([HalfSpace([1.0, 0.0], 0.0)], [0.0, 0.0])


@pytest.mark.parametrize("x, distance, closest", [
    ([2.0, 2.0], np.sqrt(2.0), [1.0, 1.0]),
    ([0.5, 0.5], 0.0, [0.5, 0.5]),
    ([2.0, 0.5], 1.0, [1.0, 0.5]),
])
def test_project_unit_square(x, distance, closest):
    d, y = project_onto_polytope(x, unit_square())
    assert d == pytest.approx(distance, abs=1e-9)
    assert np.allclose(y, closest, atol=1e-9)


@pytest.mark.parametrize("x, expected", [([2.0, 2.0], 1.0), ([0.5, 0.5], 0.0), ([2.0, 0.5], 1.0)])
def test_max_facet_distance(x, expected):
    assert max_facet_distance(x, unit_square()) == pytest.approx(expected)


def test_sandwich_face_example():
    lower, mid, upper = facet_distance_sandwich([0.5, 0.5], [2.0, 0.5], unit_square())
    assert lower == pytest.approx(1.0 / 3.0, abs=1e-9)
    assert mid == pytest.approx(1.0)
    assert upper == pytest.approx(1.0, abs=1e-9)


def test_sandwich_corner_example():
    D = unit_square()
    x = np.array([2.0, 2.0])
    lower, mid, upper = facet_distance_sandwich([0.5, 0.5], x, D)
    # oracle: distance to the nearest corner of the square
    oracle = box(0.0, 0.0, 1.0, 1.0).distance(Point(x))
    assert upper == pytest.approx(oracle, abs=1e-9)
    assert lower == pytest.approx(0.5 / np.linalg.norm(x - 0.5) * oracle, abs=1e-9)
    assert lower <= mid <= upper + 1e-12


def test_sandwich_collinear_halfplane():
    D = Polytope([HalfSpace([1.0, 0.0], 0.0)], [1.0, 0.0])
    lower, mid, upper = facet_distance_sandwich([1.0, 0.0], [-1.0, 0.0], D)
    assert (lower, mid, upper) == pytest.approx((0.5, 1.0, 1.0), abs=1e-9)


def test_sandwich_errors():
    D = unit_square()
    with pytest.raises(InteriorPoint):
        facet_distance_sandwich([0.5, 0.5], [0.2, 0.2], D)
    with pytest.raises(BadWitness):
        facet_distance_sandwich([1.0, 0.5], [2.0, 0.5], D)


def test_sandwich_random_instances():
    rng = np.random.default_rng(3)
    for _ in range(100):
        D = random_polytope(rng, int(rng.integers(2, 6)), int(rng.integers(3, 9)))
        x = rng.uniform(-6.0, 6.0, size=D.dim)
        if D.contains(x):
            continue
        lower, mid, upper = facet_distance_sandwich(D.witness, x, D)
        assert lower <= mid + 1e-9
        assert mid <= upper + 1e-9


@settings(max_examples=50, deadline=None)
@given(st.floats(-5.0, 5.0), st.floats(-5.0, 5.0))
def test_projection_matches_shapely(x1, x2):
    D = clip_to_box([HalfSpace([1.0, 1.0], 0.5)], [0.0, 0.0], [1.0, 1.0], [0.75, 0.75])
    d, _ = project_onto_polytope([x1, x2], D)
    cut_square = Polygon([(0.5, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.5)])
    assert d == pytest.approx(cut_square.distance(Point(x1, x2)), abs=1e-7)


def test_projection_waits_for_increments_to_settle():
    D = clip_to_box([HalfSpace([1.0, 1.0], 0.5)], [0.0, 0.0], [1.0, 1.0], [0.75, 0.75])
    d, y = project_onto_polytope([0.0, -2.0], D)
    assert d == pytest.approx(np.sqrt(4.25), abs=1e-8)
    assert y == pytest.approx([0.5, 0.0], abs=1e-8)


def test_projection_interior_is_identity():
    D = unit_square()
    d, y = project_onto_polytope([0.25, 0.75], D)
    assert d == 0.0
    assert np.array_equal(y, [0.25, 0.75])


def test_locate_cells():
    cover = split_cover()
    assert locate_cells([0.0, 0.3], cover) == {0, 1}
    assert locate_cells([-0.5, 0.0], cover) == {0}
    assert locate_cells([3.0, 0.0], cover) == set()


def test_validate_cover():
    cover = split_cover()
    assert validate_cover(cover, samples=2000, seed=1).fraction == 1.0
    half = CellCover([cover.cells[0]], cover.lo, cover.hi)
    report = validate_cover(half, samples=2000, seed=1)
    assert report.fraction < 1.0
    assert report.witness is not None and report.witness[0] > 0.0
    assert validate_cover(CellCover([], cover.lo, cover.hi), samples=100).fraction == 0.0
    with pytest.raises(ValueError):
        validate_cover(cover, samples=0)


def test_cover_json_roundtrip(tmp_path):
    path = tmp_path / "cover.json"
    path.write_text(json.dumps(cover_to_dict(split_cover())))
    cover = load_cover(str(path))
    assert len(cover) == 2
    assert locate_cells([0.0, 0.0], cover) == {0, 1}


def test_cover_normalizes_on_load():
    payload = {"cells": [{"halfspaces": [{"a": [2.0], "b": -2.0}, {"a": [-4.0], "b": -4.0}], "witness": [0.0]}],
               "bounds": {"lo": [-1.0], "hi": [1.0]}}
    cell = load_cover(payload).cells[0]
    assert np.allclose(np.abs(cell.A), 1.0)
    assert np.allclose(cell.b, [-1.0, -1.0])


def test_cover_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_cover(str(tmp_path / "missing.json"))
    with pytest.raises(ConfigError):
        load_cover({"cells": []})
