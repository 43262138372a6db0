from fractions import Fraction as F

import pytest

from dyntomo.errors import DimensionMismatchError, InputError, InstanceFormatError
from dyntomo.geometry import (COORDINATE_DIRECTIONS, Grid, LatticeDirection, LineAnchor, canonical_anchor,
                              canonical_line, format_rational, grid_from_xrays, point, squared_distance_to_line,
                              squared_distance_to_segment, to_rational, tomographically_equivalent, xray)

DIAG = LatticeDirection((1, 1))
ANTI = LatticeDirection((1, -1))


def test_rational_parsing():
    assert to_rational("3/6") == F(1, 2)
    assert to_rational(4) == 4
    assert format_rational(F(3, 6)) == "1/2"
    assert format_rational(F(4)) == "4"
    assert format_rational(F(-7, 2)) == "-7/2"


@pytest.mark.parametrize("bad", [0.5, True, "x/2", "1/0", None])
def test_rational_parsing_rejects(bad):
    with pytest.raises(InstanceFormatError):
        to_rational(bad)


def test_direction_normalization():
    assert LatticeDirection.of(-2, -4) == LatticeDirection((1, 2))
    assert LatticeDirection.of(0, -3) == LatticeDirection((0, 1))
    with pytest.raises(InputError):
        LatticeDirection((2, 4))
    with pytest.raises(InputError):
        LatticeDirection((-1, 0))
    with pytest.raises(InputError):
        LatticeDirection((0, 0))


def test_canonical_anchor_is_projection():
    assert canonical_anchor(COORDINATE_DIRECTIONS[0], point(3, 5)) == point(0, 5)
    assert canonical_anchor(DIAG, point(3, 1)) == point(1, -1)
    # every point of a line gets the same anchor
    assert canonical_anchor(DIAG, point(-2, -4)) == canonical_anchor(DIAG, point(1, -1))


def test_canonical_line_keys_lines():
    assert canonical_line(DIAG, point(3, 4), 1) == LineAnchor(1, point("-1/2", "1/2"))
    assert canonical_line(DIAG, point(0, 1), 1) == canonical_line(DIAG, point(5, 6), 1)
    assert canonical_line(DIAG, point(0, 1), 0) != canonical_line(DIAG, point(0, 1), 1)


def test_xray_counts_and_mass():
    f = xray([point(0, 0), point(0, 1), point(1, 0)], COORDINATE_DIRECTIONS[0])
    assert f.lines == {point(0, 0): 2, point(0, 1): 1}
    assert f.mass == 3
    assert f.anchors() == [point(0, 0), point(0, 1)]
    assert f.count(point(0, 7)) == 0


def test_xray_ignores_duplicates():
    assert xray([point(1, 1), point(1, 1)], DIAG).mass == 1


def test_coordinate_grid():
    pts = [point(0, 0), point(0, 1), point(1, 0)]
    f1, f2 = (xray(pts, s, k) for k, s in enumerate(COORDINATE_DIRECTIONS))
    grid = grid_from_xrays(f1, f2)
    assert grid.points == sorted([point(0, 0), point(0, 1), point(1, 0), point(1, 1)])
    assert grid.points_on(LineAnchor(0, point(0, 0))) == [grid.index_of(point(0, 0)), grid.index_of(point(1, 0))]


def test_oblique_grid_has_rational_points():
    pts = [point(0, 0), point(1, 0)]
    grid = grid_from_xrays(xray(pts, DIAG, 0), xray(pts, ANTI, 1))
    assert grid.points == sorted([point(0, 0), point("1/2", "-1/2"), point("1/2", "1/2"), point(1, 0)])


def test_grid_needs_distinct_directions():
    f = xray([point(0, 0)], DIAG)
    with pytest.raises(InputError):
        grid_from_xrays(f, f)


def test_grid_subset_sorted():
    grid = Grid.from_points([(2, 0), (0, 0), (1, 1)], COORDINATE_DIRECTIONS)
    assert grid.points[0] == point(0, 0)
    assert grid.subset([2, 0]) == [point(0, 0), point(2, 0)]
    assert grid.index_of((5, 5)) is None


def test_tomographic_equivalence_needs_third_direction():
    a = [point(0, 0), point(1, 1)]
    b = [point(0, 1), point(1, 0)]
    assert tomographically_equivalent(a, b, COORDINATE_DIRECTIONS)
    assert not tomographically_equivalent(a, b, COORDINATE_DIRECTIONS + (DIAG,))


def test_distances():
    assert squared_distance_to_line(point(0, 1), point(0, 0), (1, 0)) == 1
    assert squared_distance_to_line(point(3, 4), point(0, 0), (0, 0)) == 25
    assert squared_distance_to_line(point(2, 6), point(0, 0), (1, 2)) == F(4, 5)
    assert squared_distance_to_segment(point(3, 0), point(0, 0), point(1, 0)) == 4
    assert squared_distance_to_segment(point("1/2", 1), point(0, 0), point(1, 0)) == 1


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        canonical_anchor(DIAG, (1, 2, 3))
