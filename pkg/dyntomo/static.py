"""Single-frame reconstruction from two X-rays, plus exact enumeration oracles.

reconstruct_two runs a Ryser-style greedy fill and falls back to a bipartite
max-flow (lines of the first X-ray as sources, lines of the second as sinks,
one unit arc per grid point) when the greedy gets stuck on an incomplete grid.
Uniqueness is decided on the same bipartite line graph: orient present grid
points first->second and absent ones second->first; a directed cycle is a
switching component, and no cycle means the solution is unique.
"""

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple

import networkx as nx

from dyntomo import get_config
from dyntomo.errors import EnumerationBoundError, InfeasibleError, InputError, MassMismatchError
from dyntomo.geometry import Grid, LineAnchor, Point, XRayData, canonical_anchor, grid_from_xrays
from dyntomo.models import TomographyInstance, TrackSet
from dyntomo.solver.matching import FORBIDDEN

logger = logging.getLogger(__name__)


class ReconstructionStatus(Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"


@dataclass
class ReconstructionResult:
    status: ReconstructionStatus
    solution: Optional[List[Point]] = None
    unique: Optional[bool] = None
    count: Optional[int] = None

    @property
    def feasible(self) -> bool:
        return self.status == ReconstructionStatus.FEASIBLE


def _check_pair(f1: XRayData, f2: XRayData):
    if f1.mass != f2.mass:
        raise MassMismatchError([f1.mass, f2.mass])
    if f1.direction == f2.direction:
        raise InputError(f"reconstruction needs two distinct directions, got {f1.direction} twice")


def _greedy(f1: XRayData, f2: XRayData, grid: Grid) -> Optional[List[int]]:
    residual = dict(f2.lines)
    chosen = []
    order = sorted(f1.anchors(), key=lambda a: (-f1.lines[a], a))
    for a1 in order:
        options = [(i, grid.point_lines[i][1].anchor) for i in grid.points_on(LineAnchor(0, a1))]
        options = [(i, a2) for i, a2 in options if residual.get(a2, 0) > 0]
        options.sort(key=lambda item: (-residual[item[1]], item[1]))
        need = f1.lines[a1]
        if len(options) < need:
            return None
        for i, a2 in options[:need]:
            residual[a2] -= 1
            chosen.append(i)
    return sorted(chosen)


def _flow(f1: XRayData, f2: XRayData, grid: Grid) -> Optional[List[int]]:
    g = nx.DiGraph()
    for a1 in f1.anchors():
        g.add_edge("source", ("r", a1), capacity=f1.lines[a1])
    for a2 in f2.anchors():
        g.add_edge(("c", a2), "sink", capacity=f2.lines[a2])
    for i, lines in enumerate(grid.point_lines):
        g.add_edge(("r", lines[0].anchor), ("c", lines[1].anchor), capacity=1, point=i)
    if "source" not in g or "sink" not in g:
        return [] if f1.mass == 0 else None
    value, flow = nx.maximum_flow(g, "source", "sink")
    if value != f1.mass:
        return None
    chosen = [data["point"] for u, v, data in g.edges(data=True)
              if "point" in data and flow[u][v] == 1]
    return sorted(chosen)


def _pair_grid(f1: XRayData, f2: XRayData) -> Grid:
    return grid_from_xrays(f1, f2, (f1.direction, f2.direction))


def reconstruct_two(f1: XRayData, f2: XRayData, count: bool = False, cap: Optional[int] = None,
                    bound: Optional[int] = None) -> ReconstructionResult:
    """Find one point set with X-rays f1 and f2, deterministically.

    Args:
        f1: X-ray along the first direction
        f2: X-ray along a different second direction
        count: also run the (exponential) counting oracle
        cap: counting stops at this many solutions
        bound: enumeration bound for counting (defaults to ENUMERATION_BOUND)

    Raises:
        MassMismatchError: if the X-rays differ in total mass
    """
    _check_pair(f1, f2)
    grid = _pair_grid(f1, f2)
    chosen = _greedy(f1, f2, grid)
    if chosen is None:
        logger.debug("greedy fill stuck, repairing with max-flow on %d grid points", len(grid))
        chosen = _flow(f1, f2, grid)
    if chosen is None:
        return ReconstructionResult(ReconstructionStatus.INFEASIBLE, count=0 if count else None)
    result = ReconstructionResult(ReconstructionStatus.FEASIBLE, grid.subset(chosen))
    result.unique = _switching_cycle(grid, set(chosen)) is None
    if count:
        result.count = count_solutions(f1, f2, cap, bound)
    return result


def _switching_cycle(grid: Grid, chosen) -> Optional[List[int]]:
    """Grid indices along a switching cycle, or None when the solution is unique."""
    g = nx.DiGraph()
    for i, lines in enumerate(grid.point_lines):
        a, b = ("r", lines[0].anchor), ("c", lines[1].anchor)
        if i in chosen:
            g.add_edge(a, b, point=i)
        else:
            g.add_edge(b, a, point=i)
    try:
        cycle = nx.find_cycle(g)
    except nx.NetworkXNoCycle:
        return None
    return [g.edges[u, v]["point"] for u, v in cycle]


def switching_witness(f1: XRayData, f2: XRayData) -> Optional[Tuple[List[Point], List[Point]]]:
    """Points to remove and to add for a second realization, or None if unique."""
    result = reconstruct_two(f1, f2)
    if not result.feasible:
        raise InfeasibleError("no point set realizes the X-rays")
    grid = _pair_grid(f1, f2)
    chosen = {grid.index_of(p) for p in result.solution}
    cycle = _switching_cycle(grid, chosen)
    if cycle is None:
        return None
    removed = [grid.points[i] for i in cycle if i in chosen]
    added = [grid.points[i] for i in cycle if i not in chosen]
    return sorted(removed), sorted(added)


def check_uniqueness(f1: XRayData, f2: XRayData) -> bool:
    """True iff exactly one grid subset realizes both X-rays.

    Raises:
        InfeasibleError: if no realization exists
    """
    result = reconstruct_two(f1, f2)
    if not result.feasible:
        raise InfeasibleError("uniqueness is undefined for an infeasible X-ray pair")
    return result.unique


def all_solutions(xrays: Sequence[XRayData], grid: Grid, bound: Optional[int] = None) -> Iterator[List[Point]]:
    """Enumerate every subset of the grid with the given X-rays (any number of directions).

    Raises:
        EnumerationBoundError: if the grid exceeds the enumeration bound
    """
    bound = get_config().ENUMERATION_BOUND if bound is None else bound
    if len(grid) > bound:
        raise EnumerationBoundError(f"grid of {len(grid)} points exceeds the enumeration bound {bound}")
    lines = [[canonical_anchor(f.direction, p) for f in xrays] for p in grid.points]
    residual = [dict(f.lines) for f in xrays]
    # points left on each line, for pruning
    remaining = [dict() for _ in xrays]
    for point_lines in lines:
        for k, a in enumerate(point_lines):
            remaining[k][a] = remaining[k].get(a, 0) + 1
    for k, f in enumerate(xrays):
        for a, c in f.lines.items():
            if remaining[k].get(a, 0) < c:
                return
    chosen: List[int] = []

    def feasible_after(i):
        for k, a in enumerate(lines[i]):
            if residual[k].get(a, 0) > remaining[k][a]:
                return False
        return True

    def recurse(i):
        if i == len(grid):
            if all(v == 0 for r in residual for v in r.values()):
                yield grid.subset(chosen)
            return
        point_lines = lines[i]
        for k, a in enumerate(point_lines):
            remaining[k][a] -= 1
        # include point i
        if all(residual[k].get(a, 0) > 0 for k, a in enumerate(point_lines)):
            for k, a in enumerate(point_lines):
                residual[k][a] -= 1
            chosen.append(i)
            if feasible_after(i):
                yield from recurse(i + 1)
            chosen.pop()
            for k, a in enumerate(point_lines):
                residual[k][a] += 1
        # exclude point i
        if feasible_after(i):
            yield from recurse(i + 1)
        for k, a in enumerate(point_lines):
            remaining[k][a] += 1

    yield from recurse(0)


def count_solutions(f1: XRayData, f2: XRayData, cap: Optional[int] = None, bound: Optional[int] = None) -> int:
    """Exact number of realizations, truncated at cap. Exponential; for tests and small grids."""
    _check_pair(f1, f2)
    grid = _pair_grid(f1, f2)
    total = 0
    for _ in all_solutions((f1, f2), grid, bound):
        total += 1
        if cap is not None and total >= cap:
            break
    return total


def consistent_brute_force(xrays: Sequence[XRayData], bound: Optional[int] = None) -> Optional[List[Point]]:
    """First realization of X-rays in any number of planar directions, or None."""
    grid = grid_from_xrays(xrays[0], xrays[1], tuple(f.direction for f in xrays[:2]))
    grid = Grid([p for p in grid.points
                 if all(canonical_anchor(f.direction, p) in f.lines for f in xrays)],
                tuple(f.direction for f in xrays[:2]))
    return next(all_solutions(xrays, grid, bound), None)


def frame_realizations(instance: TomographyInstance, tau: int, bound: Optional[int] = None) -> List[List[Point]]:
    if instance.is_known(tau):
        return [list(instance.known_positions[tau])]
    return sorted(all_solutions(instance.frames[tau], instance.grid(tau), bound))


def _check_oracle_bounds(instance: TomographyInstance):
    cfg = get_config()
    if instance.n > cfg.ORACLE_MAX_N or instance.t > cfg.ORACLE_MAX_T:
        raise EnumerationBoundError(
            f"oracle limited to n <= {cfg.ORACLE_MAX_N}, t <= {cfg.ORACLE_MAX_T}; got n={instance.n}, t={instance.t}")
    for tau in range(instance.t):
        if len(instance.candidates(tau)) > cfg.ORACLE_GRID_BOUND:
            raise EnumerationBoundError(
                f"frame {tau} grid has {len(instance.candidates(tau))} points, oracle bound is {cfg.ORACLE_GRID_BOUND}")


def _less(a, b) -> bool:
    return b is None or a < b


def brute_force_tomtrac(instance: TomographyInstance) -> TrackSet:
    """Exact optimum over every realization of every frame and every coupling.

    Ties are broken toward the smallest (frames, couplings) encoding, frames
    compared as sorted point lists and couplings as permutation tuples.
    Markov weights are minimized step by step; other weights enumerate all
    coupling sequences.

    Raises:
        EnumerationBoundError: if the instance exceeds the oracle bounds
        InfeasibleError: if some frame has no realization
    """
    _check_oracle_bounds(instance)
    weights = instance.weights
    realizations = []
    for tau in range(instance.t):
        options = frame_realizations(instance, tau)
        if not options:
            raise InfeasibleError("no point set realizes the X-rays", frame=tau)
        realizations.append(options)

    n = instance.n
    perms = list(itertools.permutations(range(n)))
    best = None
    for frames in itertools.product(*realizations):
        if weights.is_markov:
            couplings, cost = [], Fraction(0)
            for tau in range(instance.t - 1):
                matrix = weights.step_matrix(instance, tau, frames[tau], frames[tau + 1])
                step_best, step_perm = None, None
                for perm in perms:
                    value = sum((matrix[i][perm[i]] for i in range(n)), Fraction(0))
                    if _less(value, step_best):
                        step_best, step_perm = value, perm
                couplings.append(step_perm)
                cost = cost + step_best
            candidates = [(cost, couplings)]
        else:
            candidates = []
            for couplings in itertools.product(perms, repeat=instance.t - 1):
                ts = TrackSet.from_couplings(frames, couplings)
                candidates.append((weights.objective(instance, ts.paths()), list(couplings)))
        for cost, couplings in candidates:
            if cost == FORBIDDEN:
                continue
            if best is None or cost < best[0]:
                best = (cost, frames, couplings)
    if best is None:
        raise InfeasibleError("every coupling uses a forbidden edge")
    cost, frames, couplings = best
    return TrackSet.from_couplings(frames, couplings, objective=cost)


def displacement_compatible_brute_force(instance: TomographyInstance, bound: Optional[int] = None) -> Optional[List[Point]]:
    """First frame-0 realization whose displacement images realize every later frame."""
    field = instance.displacement
    for start in frame_realizations(instance, 0, bound):
        points = list(start)
        ok = True
        for tau in range(instance.t - 1):
            images = [field.apply(tau, p) for p in points]
            if any(q is None for q in images) or len(set(images)) != len(images):
                ok = False
                break
            points = images
            if not instance.realizes(tau + 1, points) or (
                    instance.is_known(tau + 1) and sorted(points) != instance.known_positions[tau + 1]):
                ok = False
                break
        if ok:
            return sorted(start)
    return None
