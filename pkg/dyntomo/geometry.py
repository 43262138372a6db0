"""Exact rational planar geometry: points, lattice directions, X-rays and grids.

Points are plain tuples of `Fraction`, so they hash, compare lexicographically
and sort the same way on every platform.  Every line parallel to a lattice
direction s is keyed by its canonical anchor p - (p.s / s.s) s, the orthogonal
projection of any of its points onto the complement of s.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from dyntomo.errors import DimensionMismatchError, InputError, InstanceFormatError

logger = logging.getLogger(__name__)

Point = Tuple[Fraction, ...]


def to_rational(value) -> Fraction:
    """Parse an int, Fraction or "p/q" string into an exact Fraction.

    Floats are refused: a float coordinate has already lost the exactness
    the tomography constraints depend on.
    """
    if isinstance(value, bool):
        raise InstanceFormatError(f"boolean is not a rational number: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise InstanceFormatError(f"not a rational string: {value!r} ({e})")
    raise InstanceFormatError(f"unsupported numeric value {value!r}; use 'p/q' strings")


def point(*coords) -> Point:
    """Build a rational point; `point(1, "1/2")` -> (Fraction(1), Fraction(1, 2))."""
    if len(coords) == 1 and isinstance(coords[0], (tuple, list)):
        coords = tuple(coords[0])
    return tuple(to_rational(c) for c in coords)


def format_rational(value: Fraction) -> str:
    """Serialize a Fraction as "p" or "p/q"."""
    value = Fraction(value)
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def _check_dims(a: Sequence, b: Sequence):
    if len(a) != len(b):
        raise DimensionMismatchError(f"dimension mismatch: {len(a)} vs {len(b)}")


def dot(a: Sequence, b: Sequence) -> Fraction:
    _check_dims(a, b)
    return sum((Fraction(x) * y for x, y in zip(a, b)), Fraction(0))


def add(a: Point, b: Sequence) -> Point:
    _check_dims(a, b)
    return tuple(Fraction(x) + y for x, y in zip(a, b))


def sub(a: Point, b: Sequence) -> Point:
    _check_dims(a, b)
    return tuple(Fraction(x) - y for x, y in zip(a, b))


def scale(c, a: Sequence) -> Point:
    return tuple(Fraction(c) * x for x in a)


def squared_norm(a: Sequence) -> Fraction:
    return dot(a, a)


def squared_distance(a: Point, b: Point) -> Fraction:
    return squared_norm(sub(a, b))


def squared_distance_to_line(p: Point, base: Point, direction: Sequence) -> Fraction:
    """Squared euclidean distance from p to the line base + R*direction.

    A zero direction degenerates the line to the single point `base`.
    """
    diff = sub(p, base)
    ss = squared_norm(direction)
    if ss == 0:
        return squared_norm(diff)
    proj = dot(diff, direction) / ss
    return squared_norm(sub(diff, scale(proj, direction)))


def squared_distance_to_segment(p: Point, start: Point, end: Point) -> Fraction:
    """Squared euclidean distance from p to the closed segment [start, end]."""
    direction = sub(end, start)
    ss = squared_norm(direction)
    if ss == 0:
        return squared_distance(p, start)
    lam = dot(sub(p, start), direction) / ss
    lam = min(max(lam, Fraction(0)), Fraction(1))
    return squared_distance(p, add(start, scale(lam, direction)))


@dataclass(frozen=True, order=True)
class LatticeDirection:
    """A primitive integer direction whose first nonzero entry is positive."""
    vector: Tuple[int, ...]

    def __post_init__(self):
        vec = tuple(self.vector)
        if not vec or any(not isinstance(v, int) or isinstance(v, bool) for v in vec):
            raise InputError(f"lattice direction needs integer entries: {self.vector!r}")
        if all(v == 0 for v in vec):
            raise InputError("lattice direction must be nonzero")
        g = 0
        for v in vec:
            g = gcd(g, v)
        if g != 1:
            raise InputError(f"lattice direction {vec} is not primitive")
        if next(v for v in vec if v != 0) < 0:
            raise InputError(f"lattice direction {vec} is not in canonical sign")
        object.__setattr__(self, "vector", vec)

    @classmethod
    def of(cls, *entries) -> "LatticeDirection":
        """Normalize any nonzero integer vector to its canonical primitive direction."""
        if len(entries) == 1 and isinstance(entries[0], (tuple, list)):
            entries = tuple(entries[0])
        vec = tuple(int(v) for v in entries)
        if all(v == 0 for v in vec):
            raise InputError("lattice direction must be nonzero")
        g = 0
        for v in vec:
            g = gcd(g, v)
        vec = tuple(v // g for v in vec)
        if next(v for v in vec if v != 0) < 0:
            vec = tuple(-v for v in vec)
        return cls(vec)

    @property
    def dim(self) -> int:
        return len(self.vector)

    def __str__(self):
        return "(" + ",".join(str(v) for v in self.vector) + ")"


COORDINATE_DIRECTIONS = (LatticeDirection((1, 0)), LatticeDirection((0, 1)))


@dataclass(frozen=True, order=True)
class LineAnchor:
    """A lattice line: the index of its direction plus its canonical anchor."""
    direction_index: int
    anchor: Point


def canonical_anchor(direction: LatticeDirection, p: Sequence) -> Point:
    s = direction.vector
    _check_dims(s, p)
    p = tuple(Fraction(x) for x in p)
    coef = dot(p, s) / dot(s, s)
    return tuple(x - coef * v for x, v in zip(p, s))


def canonical_line(direction: LatticeDirection, p: Sequence, direction_index: int = 0) -> LineAnchor:
    """Return the canonical key of the line through p parallel to direction."""
    return LineAnchor(direction_index, canonical_anchor(direction, p))


@dataclass(frozen=True)
class XRayData:
    """Line counts of a point set along one direction; zero lines are omitted."""
    direction: LatticeDirection
    lines: Dict[Point, int] = field(default_factory=dict)
    direction_index: int = 0

    def __post_init__(self):
        for anchor, count in self.lines.items():
            if not isinstance(count, int) or count <= 0:
                raise InputError(f"X-ray count must be a positive integer, got {count!r} on line {anchor}")
            if len(anchor) != self.direction.dim:
                raise DimensionMismatchError(f"anchor {anchor} does not match direction {self.direction}")
            if dot(anchor, self.direction.vector) != 0:
                raise InputError(f"anchor {anchor} is not canonical for direction {self.direction}")

    @property
    def mass(self) -> int:
        return sum(self.lines.values())

    def anchors(self) -> List[Point]:
        """Support lines in sorted order."""
        return sorted(self.lines)

    def line_anchors(self) -> List[LineAnchor]:
        return [LineAnchor(self.direction_index, a) for a in self.anchors()]

    def count(self, anchor: Point) -> int:
        return self.lines.get(anchor, 0)


def xray(points: Iterable[Sequence], direction: LatticeDirection, direction_index: int = 0) -> XRayData:
    """Count the points of F on every line parallel to direction."""
    counts = Counter(canonical_anchor(direction, p) for p in set(tuple(Fraction(c) for c in p) for p in points))
    return XRayData(direction, dict(sorted(counts.items())), direction_index)


def _intersect(a1: Point, s1: Sequence[int], a2: Point, s2: Sequence[int]) -> Optional[Point]:
    """Intersection of a1 + R*s1 with a2 + R*s2, or None when skew or parallel."""
    d = sub(a2, a1)
    dim = len(a1)
    # lambda*s1 - mu*s2 = d; solve on the first coordinate pair with a nonzero minor
    for i in range(dim):
        for j in range(i + 1, dim):
            det = -s1[i] * s2[j] + s2[i] * s1[j]
            if det == 0:
                continue
            lam = (-d[i] * s2[j] + s2[i] * d[j]) / Fraction(det)
            mu = (s1[i] * d[j] - s1[j] * d[i]) / Fraction(det)
            if all(lam * s1[k] - mu * s2[k] == d[k] for k in range(dim)):
                return add(a1, scale(lam, s1))
            return None
    return None


@dataclass
class Grid:
    """Candidate points of one frame plus line-to-point incidence.

    Points are deduplicated and sorted lexicographically.  `point_lines[i]`
    holds the lines (one per direction) through point i and
    `line_points[line]` the indices of the points on that line.
    """
    points: List[Point]
    directions: Tuple[LatticeDirection, ...]
    line_points: Dict[LineAnchor, List[int]] = field(default_factory=dict)
    point_lines: List[Tuple[LineAnchor, ...]] = field(default_factory=list)

    def __post_init__(self):
        self.points = sorted(set(self.points))
        self._index = {p: i for i, p in enumerate(self.points)}
        self.line_points = {}
        self.point_lines = []
        for i, p in enumerate(self.points):
            lines = tuple(canonical_line(s, p, k) for k, s in enumerate(self.directions))
            self.point_lines.append(lines)
            for line in lines:
                self.line_points.setdefault(line, []).append(i)

    @classmethod
    def from_points(cls, points: Iterable[Sequence], directions: Sequence[LatticeDirection]) -> "Grid":
        return cls([tuple(Fraction(c) for c in p) for p in points], tuple(directions))

    def __len__(self):
        return len(self.points)

    def index_of(self, p: Sequence) -> Optional[int]:
        return self._index.get(tuple(Fraction(c) for c in p))

    def points_on(self, line: LineAnchor) -> List[int]:
        return self.line_points.get(line, [])

    def subset(self, indices: Iterable[int]) -> List[Point]:
        return sorted(self.points[i] for i in indices)


def grid_from_xrays(f1: XRayData, f2: XRayData, directions: Optional[Sequence[LatticeDirection]] = None) -> Grid:
    """All intersections of a support line of f1 with a support line of f2."""
    if f1.direction == f2.direction:
        raise InputError(f"grid needs two distinct directions, got {f1.direction} twice")
    if f1.direction.dim != f2.direction.dim:
        raise DimensionMismatchError("X-ray directions differ in dimension")
    directions = tuple(directions) if directions is not None else (f1.direction, f2.direction)
    s1, s2 = f1.direction.vector, f2.direction.vector
    found = set()
    for a1 in f1.anchors():
        for a2 in f2.anchors():
            p = _intersect(a1, s1, a2, s2)
            if p is not None:
                found.add(p)
    grid = Grid(list(found), directions)
    logger.debug("grid with %d points from %d x %d lines", len(grid), len(f1.lines), len(f2.lines))
    return grid


def tomographically_equivalent(points_a: Iterable[Sequence], points_b: Iterable[Sequence],
                               directions: Sequence[LatticeDirection]) -> bool:
    """True iff both point sets have identical X-rays in all given directions."""
    points_a, points_b = list(points_a), list(points_b)
    return all(xray(points_a, s).lines == xray(points_b, s).lines for s in directions)
