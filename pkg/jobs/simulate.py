"""Synthetic instance generation with hidden ground truth.

Positions live in the centered box [-box, box]^2.  Every draw comes from a
numpy Generator seeded by the scenario, so the same scenario always yields
the same instance.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Sequence, Tuple

import numpy as np

from dyntomo.errors import InputError, SolverError
from dyntomo.fitting import SampleFitFamily
from dyntomo.geometry import (COORDINATE_DIRECTIONS, LatticeDirection, Point, XRayData, add, canonical_anchor,
                              scale, tomographically_equivalent, xray)
from dyntomo.models import DisplacementField, TomographyInstance, TrackSet, WeightKind, WeightModel
from jobs.jobs_config import DEFAULT_BOX, MOTIONS

logger = logging.getLogger(__name__)

MAX_DRAWS = 2000
THIRD_DIRECTION = LatticeDirection((1, 1))


@dataclass
class Scenario:
    """What to simulate.

    Args:
        motion: one of static, straight-line, polynomial, affine-field,
            crossing, adversarial
        degree: polynomial degree for the polynomial motion
        speed: largest per-step velocity component for straight-line and crossing motion
        separation: minimum squared distance between particles of one frame
        known_frames: frames whose positions are revealed in the instance
    """
    n: int
    t: int = 3
    motion: str = "straight-line"
    box: int = DEFAULT_BOX
    seed: int = 0
    degree: int = 2
    speed: int = 2
    separation: int = 1
    matrix: Tuple[Tuple[int, ...], ...] = ((1, -1), (1, 1))
    translation: Tuple[int, ...] = (0, 0)
    known_frames: Tuple[int, ...] = (0,)
    weight_kind: WeightKind = WeightKind.SQUARED_EUCLIDEAN
    directions: Tuple[LatticeDirection, ...] = field(default=COORDINATE_DIRECTIONS)

    def __post_init__(self):
        if self.motion not in MOTIONS:
            raise InputError(f"unknown motion {self.motion!r}; choose from {', '.join(MOTIONS)}")
        if self.n < 0 or self.t < 1:
            raise InputError("scenario needs n >= 0 and t >= 1")
        if self.n > (2 * self.box + 1) ** 2:
            raise InputError(f"{self.n} particles do not fit into a box of {(2 * self.box + 1) ** 2} lattice points")
        if not 0 <= self.seed < 2 ** 64:
            raise InputError("seed must be an unsigned 64-bit integer")
        self.known_frames = tuple(sorted(set(self.known_frames)))
        if any(not 0 <= tau < self.t for tau in self.known_frames):
            raise InputError(f"known frames {self.known_frames} outside 0..{self.t - 1}")


def instance_from_tracks(paths: Sequence[Sequence[Point]], directions=COORDINATE_DIRECTIONS,
                         known_frames: Sequence[int] = (0,), **kwargs) -> Tuple[TomographyInstance, TrackSet]:
    """Turn ground-truth tracks into an instance plus the truth TrackSet.

    Checks that the emitted X-rays reproduce every true frame.
    """
    paths = [tuple(tuple(Fraction(c) for c in p) for p in path) for path in paths]
    t = len(paths[0]) if paths else 0
    frames_points = [[path[tau] for path in paths] for tau in range(t)]
    for tau, pts in enumerate(frames_points):
        if len(set(pts)) != len(pts):
            raise InputError(f"ground truth has coinciding particles in frame {tau}")
    instance = TomographyInstance.from_point_sets(frames_points, directions, known=list(known_frames), **kwargs)
    for tau, pts in enumerate(frames_points):
        emitted = [f.lines for f in instance.frames[tau]]
        if emitted != [xray(pts, s, k).lines for k, s in enumerate(directions)]:
            raise SolverError(f"simulated X-rays of frame {tau} do not match the ground truth")
    truth = TrackSet.from_paths(paths)
    truth.objective = instance.weights.objective(instance, truth.paths())
    return instance, truth


class ScenarioGenerator:
    """Draws ground-truth tracks for a scenario."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.rng = np.random.default_rng(scenario.seed)

    def _random_point(self, box=None) -> Point:
        box = self.scenario.box if box is None else box
        x, y = self.rng.integers(-box, box + 1, size=2)
        return (Fraction(int(x)), Fraction(int(y)))

    def _random_velocity(self) -> Point:
        speed = self.scenario.speed
        vx, vy = self.rng.integers(-speed, speed + 1, size=2)
        return (Fraction(int(vx)), Fraction(int(vy)))

    def _inside(self, path) -> bool:
        return all(abs(c) <= self.scenario.box for p in path for c in p)

    def _separated(self, path, accepted) -> bool:
        sep = self.scenario.separation
        for other in accepted:
            for p, q in zip(path, other):
                if sum((a - b) ** 2 for a, b in zip(p, q)) < sep:
                    return False
        return True

    def _draw(self, make_path, accepted) -> tuple:
        for _ in range(MAX_DRAWS):
            path = make_path()
            if self._inside(path) and self._separated(path, accepted):
                return path
        raise InputError(f"could not place particle {len(accepted) + 1} of a {self.scenario.motion} scenario "
                         f"after {MAX_DRAWS} draws; enlarge the box")

    def _static(self):
        t = self.scenario.t
        p = self._random_point()
        return tuple([p] * t)

    def _straight(self):
        start, velocity = self._random_point(), self._random_velocity()
        return tuple(add(start, scale(tau, velocity)) for tau in range(self.scenario.t))

    def _polynomial(self):
        q = self.scenario.degree
        if q < 1:
            raise InputError("polynomial motion needs degree >= 1")
        sample = [(tau, self._random_point()) for tau in range(q + 1)]
        curve = SampleFitFamily(q + 1).fit(sample)
        return tuple(curve(tau) for tau in range(self.scenario.t))

    def _affine(self):
        displacement = DisplacementField(self.scenario.matrix, self.scenario.translation)
        path = [self._random_point()]
        for tau in range(self.scenario.t - 1):
            path.append(displacement.apply(tau, path[-1]))
        return tuple(path)

    def tracks(self) -> List[tuple]:
        motion = self.scenario.motion
        if motion == "crossing":
            return self._crossing_tracks()
        make = {"static": self._static, "straight-line": self._straight,
                "polynomial": self._polynomial, "affine-field": self._affine}[motion]
        accepted = []
        for _ in range(self.scenario.n):
            accepted.append(self._draw(make, accepted))
        return accepted

    def _crossing_tracks(self) -> List[tuple]:
        """Pairs of straight tracks meeting halfway between frames 0 and 1."""
        t = self.scenario.t
        accepted = []
        while len(accepted) + 1 < self.scenario.n:
            for _ in range(MAX_DRAWS):
                centre = self._random_point()
                u, w = self._random_velocity(), self._random_velocity()
                if u == w:
                    continue
                pair = [tuple(add(centre, scale(Fraction(2 * tau - 1, 2), v)) for tau in range(t)) for v in (u, w)]
                if all(self._inside(p) for p in pair) and self._separated(pair[0], accepted) \
                        and self._separated(pair[1], accepted + [pair[0]]):
                    accepted.extend(pair)
                    break
            else:
                raise InputError("could not place a crossing pair; enlarge the box")
        if len(accepted) < self.scenario.n:
            accepted.append(self._draw(self._straight, accepted))
        return accepted


def generate(scenario: Scenario) -> Tuple[TomographyInstance, TrackSet]:
    """Draw ground truth for a scenario and emit its instance.

    Raises:
        InputError: if the particles cannot be placed inside the box
    """
    if scenario.motion == "adversarial":
        return adversarial_instance(scenario.n, scenario.seed, scenario.box)
    paths = ScenarioGenerator(scenario).tracks()
    kwargs = {"weights": WeightModel(scenario.weight_kind)}
    if scenario.motion == "affine-field":
        kwargs["displacement"] = DisplacementField(scenario.matrix, scenario.translation)
    instance, truth = instance_from_tracks(paths, scenario.directions, scenario.known_frames, **kwargs)
    logger.info("generated %s scenario: n=%d t=%d seed=%d", scenario.motion, scenario.n, scenario.t, scenario.seed)
    return instance, truth


def reduction_instance(f1: XRayData, f2: XRayData, f3: XRayData) -> TomographyInstance:
    """Encode three-direction consistency as a two-frame tracking instance.

    Frame 0 holds n known points on one line of the first direction; frame 1
    carries f1 and f2.  Coupling particle j to a grid point costs 0 when
    the point lies on the j-th support line of f3 and 1 otherwise, so the
    optimum is 0 exactly when some set realizes all three X-rays.

    Raises:
        InputError: unless every f3 count is 1
    """
    if any(c != 1 for c in f3.lines.values()):
        raise InputError("every third-direction line must carry exactly one point")
    n = f1.mass
    directions = (f1.direction, f2.direction)
    base = -1 - max((abs(c) for a in list(f1.lines) + list(f2.lines) for c in a), default=Fraction(0))
    start = [(Fraction(j), base) for j in range(n)]
    frame0 = tuple(xray(start, s, k) for k, s in enumerate(directions))
    frame1 = (XRayData(f1.direction, dict(f1.lines), 0), XRayData(f2.direction, dict(f2.lines), 1))
    instance = TomographyInstance(directions, [frame0, frame1], {0: start})
    grid = instance.grid(1)
    lines = f3.anchors()
    table = [[0 if canonical_anchor(f3.direction, g) == lines[j] else 1 for g in grid.points] for j in range(n)]
    instance.weights = WeightModel(WeightKind.EXPLICIT, {0: table})
    return instance


def adversarial_instance(n: int, seed: int = 0, box: int = 3) -> Tuple[TomographyInstance, TrackSet]:
    """A consistent three-direction triple from a random point set, encoded for tracking.

    The truth couples particle j to the hidden point on the j-th line of
    the third direction and has objective 0.
    """
    rng = np.random.default_rng(seed)
    for _ in range(MAX_DRAWS):
        coords = rng.integers(-box, box + 1, size=(n, 2))
        hidden = sorted({(Fraction(int(x)), Fraction(int(y))) for x, y in coords})
        if len(hidden) != n:
            continue
        f3 = xray(hidden, THIRD_DIRECTION)
        if len(f3.lines) == n:
            break
    else:
        raise InputError(f"could not draw {n} points on distinct diagonals in box {box}")
    f1, f2 = (xray(hidden, s, k) for k, s in enumerate(COORDINATE_DIRECTIONS))
    instance = reduction_instance(f1, f2, f3)
    lines = f3.anchors()
    start = instance.known_positions[0]
    paths = [(start[j], next(p for p in hidden if canonical_anchor(THIRD_DIRECTION, p) == lines[j]))
             for j in range(n)]
    if not tomographically_equivalent([p for _, p in paths], hidden, COORDINATE_DIRECTIONS):
        raise SolverError("adversarial truth does not realize its X-rays")
    truth = TrackSet.from_paths(paths)
    truth.objective = instance.weights.objective(instance, truth.paths())
    return instance, truth
