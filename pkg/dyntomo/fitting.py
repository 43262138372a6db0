"""Particle-history heuristics built on sample fits.

A k-sample is k grid points at strictly increasing times; its sample fit is
the unique curve of the family through them (Lagrange interpolation over the
rationals).  A sample is scored by how far the curve strays from the grids
at the other times:

    maxmin  max over tau of min over grid points of h(|r(tau) - g|)
    sumsq   sum over non-sample times of that inner minimum, squared
    avgbest mean of the m best maxmin scores (not a per-sample score)

Inner minima at the sample's own times are zero and are not evaluated.
"""

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from dyntomo import get_config
from dyntomo.errors import InputError
from dyntomo.geometry import (Point, add, scale, squared_distance_to_line, squared_distance_to_segment, sub,
                              to_rational)
from dyntomo.models import TomographyInstance, TrackSet, triangle_area
from dyntomo.norms import EUCLID2, NormSpec
from dyntomo.solver.matching import min_weight_perfect_matching
from dyntomo.windows import select_frame

logger = logging.getLogger(__name__)


class FamilyKind(Enum):
    POLYNOMIAL = "polynomial"
    AFFINE_LINE = "affine-line"


@dataclass(frozen=True)
class SampleFit:
    """The family curve through a sample; `sample` holds (time, point) pairs."""
    sample: Tuple[Tuple[int, Point], ...]

    def __call__(self, tau) -> Point:
        tau = Fraction(tau)
        dim = len(self.sample[0][1])
        result = [Fraction(0)] * dim
        for i, (ti, gi) in enumerate(self.sample):
            basis = Fraction(1)
            for j, (tj, _) in enumerate(self.sample):
                if j != i:
                    basis *= (tau - tj) / Fraction(ti - tj)
            if basis:
                for d in range(dim):
                    result[d] += basis * gi[d]
        return tuple(result)

    @property
    def times(self) -> Tuple[int, ...]:
        return tuple(t for t, _ in self.sample)


@dataclass(frozen=True)
class SampleFitFamily:
    """Polynomial curves of degree at most k-1 (straight lines for affine-line, k = 2)."""
    k: int = 2
    kind: FamilyKind = FamilyKind.POLYNOMIAL

    def __post_init__(self):
        if self.k < 1:
            raise InputError(f"sample size must be positive, got {self.k}")
        if self.kind == FamilyKind.AFFINE_LINE and self.k != 2:
            raise InputError("affine-line fits use exactly two sample points")

    def fit(self, sample: Sequence[Tuple[int, Point]]) -> SampleFit:
        sample = tuple(sorted((int(t), tuple(p)) for t, p in sample))
        times = [t for t, _ in sample]
        if len(set(times)) != len(times):
            raise InputError(f"sample times must be distinct: {times}")
        return SampleFit(sample)


class WeightVariant:
    """maxmin (default), sumsq, or avgbest:<m>."""

    def __init__(self, name: str = "maxmin", best_of: int = 1):
        if name not in ("maxmin", "sumsq", "avgbest"):
            raise InputError(f"unknown weight variant {name!r}")
        if best_of < 1:
            raise InputError("avgbest needs a positive sample count")
        self.name = name
        self.best_of = best_of

    @classmethod
    def parse(cls, text: Optional[str]) -> "WeightVariant":
        text = (text or "maxmin").strip().lower()
        if text.startswith("avgbest"):
            _, _, count = text.partition(":")
            try:
                return cls("avgbest", int(count or 3))
            except ValueError:
                raise InputError(f"bad weight variant {text!r}")
        return cls(text)

    def __repr__(self):
        return f"avgbest:{self.best_of}" if self.name == "avgbest" else self.name


MAXMIN = WeightVariant("maxmin")


@dataclass
class FitStats:
    """Instrumentation: every h-distance between a curve point and a grid point counts once."""
    evaluations: int = 0


@dataclass
class FitWeights:
    values: Dict[tuple, Fraction] = field(default_factory=dict)
    witnesses: Dict[tuple, SampleFit] = field(default_factory=dict)
    evaluations: int = 0


def _grids(instance: TomographyInstance) -> List[List[Point]]:
    grids = [instance.candidates(tau).points for tau in range(instance.t)]
    for tau, grid in enumerate(grids):
        if not grid:
            raise InputError(f"frame {tau} has an empty grid")
    return grids


def _inner_min(point: Point, grid: Sequence[Point], norm: NormSpec, stats: FitStats,
               floor: Optional[Fraction] = None) -> Fraction:
    """Nearest grid distance; stops early once it cannot exceed `floor`."""
    best = None
    for g in grid:
        stats.evaluations += 1
        d = norm.h_distance(point, g)
        if best is None or d < best:
            best = d
            if best == 0 or (floor is not None and best <= floor):
                break
    return best


def _score(curve: SampleFit, grids: List[List[Point]], norm: NormSpec, variant: WeightVariant,
           stats: FitStats, cutoff: Optional[Fraction] = None) -> Optional[Fraction]:
    """Score of one sample, or None once it provably cannot beat `cutoff`."""
    fixed = set(curve.times)
    total = Fraction(0)
    for tau, grid in enumerate(grids):
        if tau in fixed:
            continue
        if variant.name == "sumsq":
            inner = _inner_min(curve(tau), grid, norm, stats)
            total += inner * inner
        else:
            inner = _inner_min(curve(tau), grid, norm, stats, floor=total)
            total = max(total, inner)
        if cutoff is not None and total >= cutoff:
            return None
    return total


def _best_sample(samples, grids, norm, variant, stats, family):
    """Minimize the score over an iterable of samples; earliest sample wins ties."""
    if variant.name == "avgbest":
        scored = []
        for sample in samples:
            curve = family.fit(sample)
            scored.append((_score(curve, grids, norm, MAXMIN, stats), len(scored), curve))
        if not scored:
            return None, None
        scored.sort(key=lambda item: (item[0], item[1]))
        top = scored[:variant.best_of]
        return sum((s for s, _, _ in top), Fraction(0)) / len(top), top[0][2]
    best, witness = None, None
    for sample in samples:
        curve = family.fit(sample)
        value = _score(curve, grids, norm, variant, stats, cutoff=best)
        if value is not None and (best is None or value < best):
            best, witness = value, curve
            if best == 0:
                break
    return best, witness


def _check_k(family: SampleFitFamily, t: int):
    if family.k < 2:
        raise InputError("sample fits need k >= 2")
    if family.k > t:
        raise InputError(f"k = {family.k} exceeds the number of frames {t}")
    if family.k > get_config().MAX_SAMPLE_SIZE:
        raise InputError(f"k = {family.k} exceeds the configured maximum {get_config().MAX_SAMPLE_SIZE}")


def fit_weight_pair(instance: TomographyInstance, tau_first: int, tau_last: int, i: int, j: int,
                    family: SampleFitFamily, norm: NormSpec = EUCLID2,
                    interior_times: Optional[Sequence[int]] = None, variant: WeightVariant = MAXMIN,
                    stats: Optional[FitStats] = None) -> Tuple[Fraction, SampleFit]:
    """Best sample fit through candidate i of frame tau_first and candidate j of frame tau_last.

    Args:
        interior_times: fixed times for the k-2 free sample points; None
            ranges over every increasing tuple strictly between the anchors

    Returns:
        (gamma, witness curve)
    """
    if not 0 <= tau_first < tau_last < instance.t:
        raise InputError(f"anchor times must satisfy 0 <= {tau_first} < {tau_last} < {instance.t}")
    _check_k(family, instance.t)
    stats = stats if stats is not None else FitStats()
    grids = _grids(instance)
    a, b = grids[tau_first][i], grids[tau_last][j]
    free = family.k - 2
    if interior_times is None:
        time_options = list(itertools.combinations(range(tau_first + 1, tau_last), free))
    else:
        time_options = [tuple(interior_times)]
        if len(time_options[0]) != free or not all(tau_first < x < tau_last for x in time_options[0]):
            raise InputError(f"interior times {interior_times} do not fit between {tau_first} and {tau_last}")
    if not time_options:
        raise InputError(f"no room for {free} interior sample times between {tau_first} and {tau_last}")

    def samples():
        for times in time_options:
            for pts in itertools.product(*(grids[x] for x in times)):
                yield [(tau_first, a)] + list(zip(times, pts)) + [(tau_last, b)]

    return _best_sample(samples(), grids, norm, variant, stats, family)


def alpha_weights(instance: TomographyInstance, family: SampleFitFamily, norm: NormSpec = EUCLID2,
                  variant: WeightVariant = MAXMIN, stats: Optional[FitStats] = None) -> FitWeights:
    """Per-point weights: the best score over all k-samples through each candidate point."""
    _check_k(family, instance.t)
    stats = stats if stats is not None else FitStats()
    grids = _grids(instance)
    weights = FitWeights()
    for tau in range(instance.t):
        others = [x for x in range(instance.t) if x != tau]
        for idx, g in enumerate(grids[tau]):
            def samples(g=g, tau=tau):
                for times in itertools.combinations(others, family.k - 1):
                    for pts in itertools.product(*(grids[x] for x in times)):
                        yield [(tau, g)] + list(zip(times, pts))

            value, witness = _best_sample(samples(), grids, norm, variant, stats, family)
            weights.values[(tau, idx)] = value
            weights.witnesses[(tau, idx)] = witness
    weights.evaluations = stats.evaluations
    logger.debug("alpha weights for %d points, %d evaluations", len(weights.values), stats.evaluations)
    return weights


def default_times(t: int, k: int, tau_first: int = 0, tau_last: Optional[int] = None) -> Tuple[int, ...]:
    """Evenly spread k sample times from tau_first to tau_last."""
    tau_last = t - 1 if tau_last is None else tau_last
    span = tau_last - tau_first
    if span < k - 1:
        raise InputError(f"cannot place {k} sample times between {tau_first} and {tau_last}")
    return tuple(tau_first + s * span // (k - 1) for s in range(k))


def _nearest_assignment(curves, frame: Sequence[Point], tau: int, norm: NormSpec) -> List[int]:
    """Curves in order each take their nearest free point; ties go to the smaller point."""
    free = list(range(len(frame)))
    chosen = []
    for curve in curves:
        ref = curve(tau)
        best = min(free, key=lambda k: (norm.h_distance(ref, frame[k]), frame[k]))
        chosen.append(best)
        free.remove(best)
    return chosen


def path_fitting(instance: TomographyInstance, family: SampleFitFamily, norm: NormSpec = EUCLID2,
                 times: Optional[Sequence[int]] = None, variant: WeightVariant = MAXMIN,
                 stats: Optional[FitStats] = None, free_interior: bool = False) -> TrackSet:
    """Couple positionally determined frames along best-fitting curves.

    Endpoints at times[0] and times[-1] are matched by min-weight matching on
    the pair weights; every other frame is assigned to the matched curves by
    the nearest-reference-point rule, curves taken in (i, j) order.

    The k-2 interior sample times are pinned to times[1:-1], which keeps the
    pair weights at O(n^(k+1) t) evaluations.  With free_interior=True every
    increasing tuple of interior times between the endpoints is tried.
    """
    if not instance.positionally_determined:
        raise InputError("path fitting needs known positions for every frame")
    _check_k(family, instance.t)
    times = tuple(times) if times is not None else default_times(instance.t, family.k)
    if len(times) != family.k or list(times) != sorted(set(times)):
        raise InputError(f"sample times {times} must be {family.k} strictly increasing frames")
    stats = stats if stats is not None else FitStats()
    first, last = times[0], times[-1]
    frames = [list(instance.known_positions[tau]) for tau in range(instance.t)]
    n = instance.n

    gammas, witnesses = [], {}
    for i in range(n):
        row = []
        for j in range(n):
            value, curve = fit_weight_pair(instance, first, last, i, j, family, norm,
                                           None if free_interior else times[1:-1], variant, stats)
            row.append(value)
            witnesses[(i, j)] = curve
        gammas.append(row)
    matching = min_weight_perfect_matching(gammas)
    pairs = [(i, matching.permutation[i]) for i in range(n)]
    curves = [witnesses[pair] for pair in pairs]

    assignment = {first: [i for i, _ in pairs], last: [j for _, j in pairs]}
    for tau in range(instance.t):
        if tau not in assignment:
            assignment[tau] = _nearest_assignment(curves, frames[tau], tau, norm)
    paths = [tuple(frames[tau][assignment[tau][c]] for tau in range(instance.t)) for c in range(n)]
    result = TrackSet.from_paths(paths)
    result.objective = instance.weights.objective(instance, result.paths())
    result.diagnostics.update({"fit_value": matching.value, "weight_evaluations": stats.evaluations,
                               "sample_times": times})
    logger.info("path fitting: fit value %s, %d weight evaluations", matching.value, stats.evaluations)
    return result


def tomographic_fitting(instance: TomographyInstance, family: Optional[SampleFitFamily] = None,
                        norm: NormSpec = EUCLID2, variant: WeightVariant = MAXMIN,
                        stats: Optional[FitStats] = None) -> TrackSet:
    """Pick every frame by an LP weighted with sample-fit point weights, then couple.

    The couplings use omega(i, j) = alpha(i) + alpha(j); since that sum is the
    same for every permutation, the matching returns the identity pairing of
    the sorted frames.
    """
    family = family or SampleFitFamily(2)
    stats = stats if stats is not None else FitStats()
    alphas = alpha_weights(instance, family, norm, variant, stats)
    frames = []
    for tau in range(instance.t):
        costs = [alphas.values[(tau, idx)] for idx in range(len(instance.candidates(tau)))]
        frames.append(select_frame(instance, tau, costs))
    couplings = []
    for tau in range(instance.t - 1):
        ca, cb = instance.candidates(tau), instance.candidates(tau + 1)
        matrix = [[alphas.values[(tau, ca.index_of(p))] + alphas.values[(tau + 1, cb.index_of(q))]
                   for q in frames[tau + 1]] for p in frames[tau]]
        couplings.append(min_weight_perfect_matching(matrix).permutation)
    result = TrackSet.from_couplings(frames, couplings)
    result.objective = instance.weights.objective(instance, result.paths())
    result.diagnostics.update({
        "alpha_total": sum((alphas.values[(tau, instance.candidates(tau).index_of(p))]
                            for tau, frame in enumerate(frames) for p in frame), Fraction(0)),
        "weight_evaluations": stats.evaluations})
    return result


def tomographic_path_fitting(instance: TomographyInstance, family: Optional[SampleFitFamily] = None,
                             norm: NormSpec = EUCLID2, variant: WeightVariant = MAXMIN,
                             times: Optional[Sequence[int]] = None) -> TrackSet:
    """Frames from tomographic_fitting, tracks from path_fitting on those frames."""
    family = family or SampleFitFamily(2)
    selected = tomographic_fitting(instance, family, norm, variant)
    determined = instance.with_known({tau: frame for tau, frame in enumerate(selected.frames)})
    result = path_fitting(determined, family, norm, times, variant)
    result.diagnostics["alpha_total"] = selected.diagnostics["alpha_total"]
    return result


def _hull_distance(g: Point, start: Point, end: Point, speed_bound: Optional[Fraction]) -> Fraction:
    """Squared distance from g to the set where a particle moving start -> end is expected next.

    Without a speed bound that is the whole line through start and end; with
    one it is the segment around the extrapolated point 2*end - start
    reaching speed_bound step lengths either way.  Equal points give the point.
    """
    step = sub(end, start)
    if speed_bound is None:
        return squared_distance_to_line(g, end, step)
    expected = add(end, step)
    return squared_distance_to_segment(g, sub(expected, scale(speed_bound, step)),
                                       add(expected, scale(speed_bound, step)))


def _hull_weights(grid: Sequence[Point], pairs, speed_bound) -> List[Fraction]:
    return [min(_hull_distance(g, a, b, speed_bound) for a, b in pairs) for g in grid]


def _straightness(paths) -> Fraction:
    return sum((triangle_area(*path[s:s + 3]) for path in paths for s in range(len(path) - 2)), Fraction(0))


def _forward(instance, f0, f1, norm, speed_bound):
    """Couple f0 -> f1 by distance, then choose frame 2 by line weights and couple f1 -> f2."""
    m01 = min_weight_perfect_matching([[norm.h_distance(p, q) for q in f1] for p in f0]).permutation
    pairs = [(f0[i], f1[m01[i]]) for i in range(len(f0))]
    grid2 = instance.candidates(2).points
    f2 = select_frame(instance, 2, _hull_weights(grid2, pairs, speed_bound))
    # the f1 point's expected continuation decides its partner in f2
    origin = {b: a for a, b in pairs}
    m12 = min_weight_perfect_matching(
        [[_hull_distance(q, origin[p], p, speed_bound) for q in f2] for p in f1]).permutation
    return f2, [m01, m12]


def two_way_fitting(instance: TomographyInstance, norm: NormSpec = EUCLID2,
                    speed_bound: Optional[Fraction] = None, max_rounds: Optional[int] = None) -> TrackSet:
    """Alternate forward rolling passes with backward straight-line refits on three frames.

    Round 1 reconstructs frame 0, rolls to frame 1 by distance and to frame 2
    by distance to the lines through matched pairs.  Every later round refits
    frame 1 to the midpoints of frame-0/frame-2 pairs, re-derives frame 0
    from backward lines, and rolls forward to frame 2 again.  The loop stops
    when a triple of frames repeats; the straightest triple seen is returned.
    """
    if instance.t != 3:
        raise InputError(f"two-way fitting works on exactly three frames, got {instance.t}")
    max_rounds = max_rounds or get_config().TWO_WAY_MAX_ROUNDS
    if speed_bound is not None:
        speed_bound = to_rational(speed_bound)
        if speed_bound < 0:
            raise InputError(f"speed bound must be nonnegative, got {speed_bound}")

    f0 = select_frame(instance, 0)
    f1 = select_frame(instance, 1, [min(norm.h_distance(g, p) for p in f0)
                                    for g in instance.candidates(1).points])
    f2, couplings = _forward(instance, f0, f1, norm, speed_bound)

    seen = set()
    trace = []
    best = None
    status = "ok"
    rounds = 0
    while True:
        rounds += 1
        key = (tuple(f0), tuple(f1), tuple(f2))
        if key in seen:
            break
        seen.add(key)
        tracks = TrackSet.from_couplings([f0, f1, f2], couplings)
        value = _straightness(tracks.paths())
        trace.append(value)
        logger.debug("two-way round %d: straightness %s", rounds, value)
        if best is None or value < best[0]:
            best = (value, tracks)
        if rounds >= max_rounds:
            logger.warning("two-way fitting hit the %d round cap without a repeated triple", max_rounds)
            status = "iteration_cap"
            break

        mids = [scale(Fraction(1, 2), add(p, q)) for p in f0 for q in f2]
        f1 = select_frame(instance, 1, [min(norm.h_distance(g, m) for m in mids)
                                        for g in instance.candidates(1).points])
        m12 = min_weight_perfect_matching([[norm.h_distance(p, q) for q in f2] for p in f1]).permutation
        back_pairs = [(f2[m12[j]], f1[j]) for j in range(len(f1))]
        f0 = select_frame(instance, 0, _hull_weights(instance.candidates(0).points, back_pairs, speed_bound))
        f2, couplings = _forward(instance, f0, f1, norm, speed_bound)

    value, result = best
    result.objective = value
    result.status = status
    result.diagnostics.update({"objective_trace": trace, "rounds": len(trace),
                               "weight_objective": instance.weights.objective(instance, result.paths())})
    return result


def k_rolling_horizon(instance: TomographyInstance, k: int = 2, norm: NormSpec = EUCLID2) -> TrackSet:
    """Rolling horizon whose next-frame weights extrapolate each track's last k points.

    Each track's last (up to) k positions are interpolated by a polynomial
    and evaluated one step ahead; a grid point's weight is its distance to
    the closest prediction.  With k = 1 this is plain rolling horizon.
    """
    if not instance.is_known(0):
        raise InputError("k-rolling horizon needs the positions of the first frame")
    if k < 1:
        raise InputError(f"history length must be positive, got {k}")
    paths = [[p] for p in instance.known_positions[0]]
    for tau in range(instance.t - 1):
        predictions = []
        for path in paths:
            history = list(enumerate(path))[-k:]
            predictions.append(SampleFitFamily(len(history)).fit(history)(tau + 1))
        grid = instance.candidates(tau + 1).points
        frame = select_frame(instance, tau + 1, [min(norm.h_distance(g, r) for r in predictions) for g in grid])
        perm = min_weight_perfect_matching([[norm.h_distance(r, q) for q in frame] for r in predictions]).permutation
        for c, path in enumerate(paths):
            path.append(frame[perm[c]])
    result = TrackSet.from_paths([tuple(p) for p in paths])
    result.objective = instance.weights.objective(instance, result.paths())
    result.diagnostics["history"] = k
    return result
