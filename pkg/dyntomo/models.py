# models.py
"""Instance, weight, displacement and track types for dynamic tomography.

Frames are indexed from 0.  A frame's *candidates* are its known positions
when the frame is positionally determined and its X-ray grid otherwise;
explicit weight tables and window constraints index into them.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from dyntomo.errors import (DimensionMismatchError, InputError, MassMismatchError, SolverError)
from dyntomo.geometry import (COORDINATE_DIRECTIONS, Grid, LatticeDirection, Point, XRayData, add,
                              canonical_anchor, grid_from_xrays, squared_distance, sub, xray)
from dyntomo.norms import EUCLID2, NormSpec
from dyntomo.solver.lp import RELATIONS
from dyntomo.solver.matching import FORBIDDEN

logger = logging.getLogger(__name__)


class WeightKind(Enum):
    EXPLICIT = "explicit"
    SQUARED_EUCLIDEAN = "squared-euclidean"
    EUCLIDEAN = "euclidean"
    NEAREST_POINT_ALPHA = "nearest-point-alpha"
    TRIANGLE_AREA = "triangle-area"
    PATH_TABLE = "path-table"


MARKOV_KINDS = {WeightKind.EXPLICIT, WeightKind.SQUARED_EUCLIDEAN, WeightKind.EUCLIDEAN,
                WeightKind.NEAREST_POINT_ALPHA}


def triangle_area(a: Point, b: Point, c: Point) -> Fraction:
    """Area of the planar triangle abc."""
    u, v = sub(b, a), sub(c, a)
    return abs(u[0] * v[1] - u[1] * v[0]) / 2


@dataclass
class WeightModel:
    """How the cost of a coupling is measured.

    Markov kinds price every consecutive pair (p at tau, q at tau+1); the
    euclidean kind is evaluated as the squared length so costs stay rational.
    triangle-area sums the areas of consecutive point triples of a track and
    path-table looks whole tracks up in `path_values` (missing tracks are
    forbidden).
    """
    kind: WeightKind = WeightKind.SQUARED_EUCLIDEAN
    tables: Dict[int, List[List[object]]] = field(default_factory=dict)
    norm: NormSpec = EUCLID2
    path_values: Dict[Tuple[Point, ...], Fraction] = field(default_factory=dict)

    @property
    def is_markov(self) -> bool:
        return self.kind in MARKOV_KINDS

    def edge_weight(self, tau: int, i: int, j: int, p: Point, q: Point):
        """Weight of coupling candidate i of frame tau to candidate j of frame tau+1."""
        if self.kind == WeightKind.EXPLICIT:
            try:
                return self.tables[tau][i][j]
            except (KeyError, IndexError):
                raise InputError(f"explicit weight table has no entry for step {tau}, edge ({i}, {j})")
        if self.kind in (WeightKind.SQUARED_EUCLIDEAN, WeightKind.EUCLIDEAN):
            return squared_distance(p, q)
        if self.kind == WeightKind.NEAREST_POINT_ALPHA:
            return self.norm.h_distance(p, q)
        raise InputError(f"weight kind {self.kind.value} has no per-edge weights")

    def step_matrix(self, instance: "TomographyInstance", tau: int,
                    points_a: Sequence[Point], points_b: Sequence[Point]) -> List[List[object]]:
        cand_a, cand_b = instance.candidates(tau), instance.candidates(tau + 1)
        rows = []
        for p in points_a:
            i = cand_a.index_of(p)
            rows.append([self.edge_weight(tau, i, cand_b.index_of(q), p, q) for q in points_b])
        return rows

    def path_cost(self, instance: "TomographyInstance", path: Sequence[Point]):
        if self.kind == WeightKind.TRIANGLE_AREA:
            return sum((triangle_area(*path[s:s + 3]) for s in range(len(path) - 2)), Fraction(0))
        if self.kind == WeightKind.PATH_TABLE:
            return self.path_values.get(tuple(path), FORBIDDEN)
        total = Fraction(0)
        for tau in range(len(path) - 1):
            i = instance.candidates(tau).index_of(path[tau])
            j = instance.candidates(tau + 1).index_of(path[tau + 1])
            total += self.edge_weight(tau, i, j, path[tau], path[tau + 1])
        return total

    def objective(self, instance: "TomographyInstance", paths: Sequence[Sequence[Point]]):
        """Total cost of a set of tracks; FORBIDDEN if any track is not allowed."""
        total = Fraction(0)
        for path in paths:
            total += self.path_cost(instance, path)
        return total


@dataclass(frozen=True)
class WindowConstraint:
    """sum of x over the window's grid points (<=|=|>=) bound, in one frame."""
    frame: int
    window: FrozenSet[int]
    relation: str
    bound: int

    def __post_init__(self):
        object.__setattr__(self, "window", frozenset(self.window))
        if not self.window:
            raise InputError(f"empty window in frame {self.frame}")
        if self.relation not in RELATIONS:
            raise InputError(f"unknown window relation {self.relation!r}")
        if not isinstance(self.bound, int) or isinstance(self.bound, bool):
            raise InputError(f"window bound must be an integer, got {self.bound!r}")
        if self.bound < 0:
            raise InputError(f"window bound must be nonnegative, got {self.bound}")

    def satisfied_by(self, selected: Sequence[int]) -> bool:
        hits = len(self.window.intersection(selected))
        if self.relation == "<=":
            return hits <= self.bound
        if self.relation == ">=":
            return hits >= self.bound
        return hits == self.bound


@dataclass
class DisplacementField:
    """An affine map x -> Mx + c, or per-step tables point -> point.

    Tables are partial: a point without an image has no successor.
    """
    matrix: Optional[Tuple[Tuple[Fraction, ...], ...]] = None
    translation: Optional[Tuple[Fraction, ...]] = None
    tables: Dict[int, Dict[Point, Point]] = field(default_factory=dict)

    def __post_init__(self):
        if self.matrix is not None:
            self.matrix = tuple(tuple(Fraction(v) for v in row) for row in self.matrix)
            d = len(self.matrix)
            if any(len(row) != d for row in self.matrix):
                raise DimensionMismatchError("displacement matrix must be square")
            self.translation = tuple(Fraction(v) for v in (self.translation or (0,) * d))
            if len(self.translation) != d:
                raise DimensionMismatchError("translation length differs from matrix size")
            if self.determinant() == 0:
                raise InputError("displacement matrix is not invertible")
        elif not self.tables:
            raise InputError("displacement field needs a matrix or tables")
        for tau, table in self.tables.items():
            if len(set(table.values())) != len(table):
                raise InputError(f"tabulated displacement for step {tau} is not injective")

    @property
    def is_affine(self) -> bool:
        return self.matrix is not None

    def determinant(self) -> Fraction:
        from dyntomo.solver.tu import determinant
        return determinant(self.matrix)

    def linear(self, v: Sequence) -> Point:
        return tuple(sum((a * Fraction(x) for a, x in zip(row, v)), Fraction(0)) for row in self.matrix)

    def apply(self, tau: int, p: Point) -> Optional[Point]:
        """Image of p under the step tau -> tau+1, or None when unmapped."""
        if tau in self.tables:
            return self.tables[tau].get(p)
        if self.matrix is None:
            return None
        return add(self.linear(p), self.translation)

    def is_proper(self, directions: Sequence[LatticeDirection]) -> bool:
        """True when no X-ray direction is mapped onto an X-ray direction."""
        if not self.is_affine:
            return False
        targets = set(directions[:2])
        for s in directions[:2]:
            image = self.linear(s.vector)
            if any(v.denominator != 1 for v in image):
                scale = 1
                for v in image:
                    scale = scale * v.denominator
                image = tuple(v * scale for v in image)
            if LatticeDirection.of(*(int(v) for v in image)) in targets:
                return False
        return True


@dataclass
class TomographyInstance:
    """X-ray data of t frames plus optional side information.

    Args:
        directions: the lattice directions, shared by all frames
        frames: per frame one XRayData per direction, in direction order
        known_positions: frame -> sorted point list for positionally determined frames
        displacement: optional displacement field
        weights: coupling cost model
        windows: frame -> window constraints (indices into that frame's grid)
    """
    directions: Tuple[LatticeDirection, ...]
    frames: List[Tuple[XRayData, ...]]
    known_positions: Dict[int, List[Point]] = field(default_factory=dict)
    displacement: Optional[DisplacementField] = None
    weights: WeightModel = field(default_factory=WeightModel)
    windows: Dict[int, List[WindowConstraint]] = field(default_factory=dict)

    def __post_init__(self):
        self.directions = tuple(self.directions)
        if len(self.directions) < 2:
            raise InputError("at least two X-ray directions are required")
        dim = self.directions[0].dim
        if any(s.dim != dim for s in self.directions):
            raise DimensionMismatchError("directions differ in dimension")
        self.frames = [tuple(f) for f in self.frames]
        for tau, frame in enumerate(self.frames):
            if len(frame) != len(self.directions):
                raise InputError(f"frame {tau} has {len(frame)} X-rays for {len(self.directions)} directions")
            for k, f in enumerate(frame):
                if f.direction != self.directions[k]:
                    raise InputError(f"frame {tau} X-ray {k} uses direction {f.direction}, expected {self.directions[k]}")
            masses = [f.mass for f in frame]
            if len(set(masses)) != 1:
                raise MassMismatchError(masses, frame=tau)
        if self.frames and len({frame[0].mass for frame in self.frames}) != 1:
            raise MassMismatchError([frame[0].mass for frame in self.frames])
        self.known_positions = {tau: sorted(set(pts)) for tau, pts in self.known_positions.items()}
        for tau, pts in self.known_positions.items():
            if not 0 <= tau < self.t:
                raise InputError(f"known positions given for missing frame {tau}")
            for k, s in enumerate(self.directions):
                if xray(pts, s).lines != self.frames[tau][k].lines:
                    raise InputError(f"known positions of frame {tau} do not realize its X-ray along {s}")
        for tau, constraints in self.windows.items():
            if not 0 <= tau < self.t:
                raise InputError(f"windows given for missing frame {tau}")
            size = len(self.grid(tau))
            for c in constraints:
                if any(not 0 <= i < size for i in c.window):
                    raise InputError(f"window in frame {tau} references a point outside the grid")
        self._grids: Dict[int, Grid] = {}
        self._candidates: Dict[int, Grid] = {}

    @classmethod
    def from_point_sets(cls, frames_points: Sequence[Sequence[Sequence]],
                        directions: Sequence[LatticeDirection] = COORDINATE_DIRECTIONS,
                        known: Optional[Sequence[int]] = None, **kwargs) -> "TomographyInstance":
        """Build an instance from ground-truth point sets.

        `known` lists the frames whose positions are revealed; None reveals none.
        """
        frames_points = [[tuple(Fraction(c) for c in p) for p in pts] for pts in frames_points]
        frames = [tuple(xray(pts, s, k) for k, s in enumerate(directions)) for pts in frames_points]
        known_positions = {tau: frames_points[tau] for tau in (known or [])}
        return cls(tuple(directions), frames, known_positions=known_positions, **kwargs)

    @property
    def t(self) -> int:
        return len(self.frames)

    @property
    def n(self) -> int:
        return self.frames[0][0].mass if self.frames else 0

    @property
    def dim(self) -> int:
        return self.directions[0].dim

    def is_known(self, tau: int) -> bool:
        return tau in self.known_positions

    @property
    def positionally_determined(self) -> bool:
        return all(self.is_known(tau) for tau in range(self.t))

    def grid(self, tau: int) -> Grid:
        """X-ray grid of frame tau from its first two directions."""
        if not hasattr(self, "_grids"):
            self._grids = {}
        if tau not in self._grids:
            f1, f2 = self.frames[tau][0], self.frames[tau][1]
            grid = grid_from_xrays(f1, f2, self.directions)
            if len(self.directions) > 2:
                grid = Grid([p for p in grid.points if all(
                    canonical_anchor(s, p) in self.frames[tau][k].lines
                    for k, s in enumerate(self.directions))], self.directions)
            self._grids[tau] = grid
        return self._grids[tau]

    def candidates(self, tau: int) -> Grid:
        if not hasattr(self, "_candidates"):
            self._candidates = {}
        if tau not in self._candidates:
            if self.is_known(tau):
                self._candidates[tau] = Grid.from_points(self.known_positions[tau], self.directions)
            else:
                self._candidates[tau] = self.grid(tau)
        return self._candidates[tau]

    def with_known(self, positions: Dict[int, Sequence[Point]]) -> "TomographyInstance":
        """Copy of this instance with extra frames revealed."""
        known = dict(self.known_positions)
        known.update({tau: list(pts) for tau, pts in positions.items()})
        return TomographyInstance(self.directions, list(self.frames), known, self.displacement,
                                  self.weights, dict(self.windows))

    def realizes(self, tau: int, points: Sequence[Point]) -> bool:
        return all(xray(points, s).lines == self.frames[tau][k].lines for k, s in enumerate(self.directions))


@dataclass
class TrackSet:
    """Reconstructed frames and the tracks threading them.

    `frames[tau]` is the sorted point list F^(tau); `tracks[p][tau]` is the
    index in frames[tau] of particle p's position.
    """
    frames: List[List[Point]]
    tracks: List[Tuple[int, ...]]
    objective: Optional[object] = None
    status: str = "ok"
    diagnostics: Dict[str, object] = field(default_factory=dict)

    @classmethod
    def from_paths(cls, paths: Sequence[Sequence[Point]], t: Optional[int] = None, **kwargs) -> "TrackSet":
        """Build from explicit point paths; `t` sizes the frames when there are no paths."""
        if paths:
            t = len(paths[0])
        t = t or 0
        frames = [sorted(path[tau] for path in paths) for tau in range(t)]
        index = [{p: i for i, p in enumerate(frame)} for frame in frames]
        tracks = [tuple(index[tau][path[tau]] for tau in range(t)) for path in paths]
        return cls(frames, tracks, **kwargs).canonical()

    @classmethod
    def from_couplings(cls, frames: Sequence[Sequence[Point]], couplings: Sequence[Sequence[int]],
                       **kwargs) -> "TrackSet":
        """Chain per-step permutations (coupling[tau][i] = successor of point i of frame tau)."""
        frames = [list(f) for f in frames]
        tracks = []
        for start in range(len(frames[0])):
            path = [start]
            for perm in couplings:
                path.append(perm[path[-1]])
            tracks.append(tuple(path))
        return cls(frames, tracks, **kwargs).canonical()

    @property
    def n(self) -> int:
        return len(self.tracks)

    @property
    def t(self) -> int:
        return len(self.frames)

    def paths(self) -> List[Tuple[Point, ...]]:
        return [tuple(self.frames[tau][idx] for tau, idx in enumerate(track)) for track in self.tracks]

    def canonical(self) -> "TrackSet":
        """Sort tracks by their frame-0 point (then later points)."""
        self.tracks = sorted(self.tracks, key=lambda tr: tuple(self.frames[tau][i] for tau, i in enumerate(tr)))
        return self

    def edges(self) -> set:
        return {(tau, path[tau], path[tau + 1]) for path in self.paths() for tau in range(self.t - 1)}

    def validate(self, instance: TomographyInstance):
        """Raise SolverError unless every frame realizes its X-rays and couplings are bijective."""
        if self.t != instance.t:
            raise SolverError(f"track set has {self.t} frames, instance has {instance.t}")
        for tau, frame in enumerate(self.frames):
            if not instance.realizes(tau, frame):
                raise SolverError(f"frame {tau} does not realize its X-rays")
            used = sorted(track[tau] for track in self.tracks)
            if used != list(range(len(frame))):
                raise SolverError(f"coupling at frame {tau} is not a bijection")
        return True
