"""Coupling algorithms: Markov matchings, the coupled ILP, rolling horizon
tomography and displacement-field reconstruction."""

import logging
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from dyntomo import get_config
from dyntomo.errors import BudgetExhaustedError, InfeasibleError, InputError, SolverError
from dyntomo.frames import add_window_rows, add_xray_rows
from dyntomo.geometry import Point, canonical_anchor
from dyntomo.models import TomographyInstance, TrackSet
from dyntomo.norms import NormSpec
from dyntomo.solver.ilp import IlpModel, solve_ilp
from dyntomo.solver.lp import EQ, LinearProgram, Status
from dyntomo.solver.matching import FORBIDDEN, min_weight_perfect_matching
from dyntomo.windows import select_frame

logger = logging.getLogger(__name__)


def _require_markov(instance: TomographyInstance):
    if not instance.weights.is_markov:
        raise InputError(f"weight model {instance.weights.kind.value} is not Markov-type")


def _couple(instance: TomographyInstance, frames: List[List[Point]], workers: int = 1):
    """One min-weight matching per consecutive frame pair, merged in frame order."""
    def step(tau):
        matrix = instance.weights.step_matrix(instance, tau, frames[tau], frames[tau + 1])
        try:
            return min_weight_perfect_matching(matrix)
        except InfeasibleError as e:
            raise InfeasibleError(str(e), frame=tau + 1)

    steps = range(len(frames) - 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(step, steps))
    return [step(tau) for tau in steps]


def trac_markov(instance: TomographyInstance, workers: int = 1) -> TrackSet:
    """Optimal tracks of a positionally determined instance under Markov weights.

    The problem splits into t-1 independent assignment problems; the total
    objective is the sum of the matching values.
    """
    missing = [tau for tau in range(instance.t) if not instance.is_known(tau)]
    if missing:
        raise InputError(f"markov tracking needs known positions for every frame; missing {missing}")
    _require_markov(instance)
    frames = [list(instance.known_positions[tau]) for tau in range(instance.t)]
    matchings = _couple(instance, frames, workers)
    objective = sum((m.value for m in matchings), Fraction(0))
    logger.info("markov tracking: %d frames, objective %s", instance.t, objective)
    return TrackSet.from_couplings(frames, [m.permutation for m in matchings], objective=objective)


def _first_infeasible_frame(instance: TomographyInstance) -> Optional[int]:
    for tau in range(instance.t):
        if instance.is_known(tau):
            continue
        try:
            select_frame(instance, tau)
        except InfeasibleError:
            return tau
    return None


def tomtrac_ilp(instance: TomographyInstance, node_budget: Optional[int] = None) -> TrackSet:
    """Jointly choose every frame and coupling by one 0/1 integer program.

    Variables: xi for each candidate point of each frame, eta for each
    candidate edge between consecutive frames.  Each tomographic frame gets
    its X-ray (and window) rows; every selected point leaves along exactly
    one edge and enters along exactly one edge.

    Raises:
        InfeasibleError: if no frame selection admits a coupling
        BudgetExhaustedError: if branch-and-bound hits the node budget
    """
    _require_markov(instance)
    if node_budget is None:
        node_budget = get_config().NODE_BUDGET
    lp = LinearProgram()
    xi: List[List[int]] = []
    for tau in range(instance.t):
        cand = instance.candidates(tau)
        fixed = instance.is_known(tau)
        cols = [lp.add_variable(0, 1 if fixed else 0, 1, name=f"xi{tau}_{i}") for i in range(len(cand))]
        xi.append(cols)
        if not fixed:
            add_xray_rows(lp, instance.frames[tau], cand, cols)
            add_window_rows(lp, instance.windows.get(tau, []), cols)

    eta: Dict[Tuple[int, int, int], int] = {}
    for tau in range(instance.t - 1):
        cand_a, cand_b = instance.candidates(tau), instance.candidates(tau + 1)
        matrix = instance.weights.step_matrix(instance, tau, cand_a.points, cand_b.points)
        for i in range(len(cand_a)):
            for j in range(len(cand_b)):
                w = matrix[i][j]
                if w == FORBIDDEN:
                    continue
                eta[(tau, i, j)] = lp.add_variable(w, 0, 1, name=f"eta{tau}_{i}_{j}")
        for i in range(len(cand_a)):
            row = {eta[(tau, i, j)]: 1 for j in range(len(cand_b)) if (tau, i, j) in eta}
            row[xi[tau][i]] = -1
            lp.add_row(row, EQ, 0)
        for j in range(len(cand_b)):
            row = {eta[(tau, i, j)]: 1 for i in range(len(cand_a)) if (tau, i, j) in eta}
            row[xi[tau + 1][j]] = -1
            lp.add_row(row, EQ, 0)

    model = IlpModel(lp, frozenset(range(lp.num_vars)))
    outcome = solve_ilp(model, node_budget)
    logger.info("tomtrac ILP: %d columns, %d rows, %d nodes, status %s",
                lp.num_vars, lp.num_rows, outcome.nodes, outcome.status.value)
    if outcome.status == Status.BUDGET_EXHAUSTED:
        raise BudgetExhaustedError(f"branch-and-bound stopped after {outcome.nodes} nodes")
    if outcome.status != Status.OPTIMAL:
        raise InfeasibleError("no coupled solution exists", frame=_first_infeasible_frame(instance))

    x = outcome.primal
    frames = [instance.candidates(tau).subset(i for i, col in enumerate(xi[tau]) if x[col] == 1)
              for tau in range(instance.t)]
    couplings = []
    for tau in range(instance.t - 1):
        cand_a, cand_b = instance.candidates(tau), instance.candidates(tau + 1)
        pos_b = {p: k for k, p in enumerate(frames[tau + 1])}
        perm = [None] * len(frames[tau])
        for (s, i, j), col in eta.items():
            if s == tau and x[col] == 1:
                perm[frames[tau].index(cand_a.points[i])] = pos_b[cand_b.points[j]]
        couplings.append(perm)
    result = TrackSet.from_couplings(frames, couplings, objective=outcome.objective,
                                     diagnostics={"nodes": outcome.nodes, "pivots": outcome.pivots})
    return result


def rolling_horizon(instance: TomographyInstance, norm: Optional[NormSpec] = None, workers: int = 1) -> TrackSet:
    """Reconstruct frame by frame from a known first frame.

    Each grid point of the next frame is weighted by its h-distance to the
    nearest accepted point of the current frame; a vertex of the frame LP
    gives the next frame.  Consecutive frames are then coupled by a full
    min-weight matching on the same distances.
    """
    if not instance.is_known(0):
        raise InputError("rolling horizon needs the positions of the first frame")
    norm = norm or instance.weights.norm
    frames = [list(instance.known_positions[0])]
    for tau in range(instance.t - 1):
        grid = instance.candidates(tau + 1)
        alphas = [min(norm.h_distance(g, p) for p in frames[tau]) for g in grid.points]
        frames.append(select_frame(instance, tau + 1, alphas))
        logger.debug("rolling horizon frame %d: %s", tau + 1, frames[-1])
    return _finish(instance, frames, norm, workers)


def _finish(instance: TomographyInstance, frames: List[List[Point]], norm: NormSpec, workers: int = 1,
            **diagnostics) -> TrackSet:
    """Couple chosen frames by norm distance and price the tracks with the instance weights."""
    def step(tau):
        matrix = [[norm.h_distance(p, q) for q in frames[tau + 1]] for p in frames[tau]]
        return min_weight_perfect_matching(matrix).permutation

    steps = range(len(frames) - 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            couplings = list(pool.map(step, steps))
    else:
        couplings = [step(tau) for tau in steps]
    result = TrackSet.from_couplings(frames, couplings, diagnostics=dict(diagnostics))
    result.objective = instance.weights.objective(instance, result.paths())
    return result


def _composed_images(instance: TomographyInstance, p: Point) -> Optional[List[Point]]:
    images = [p]
    for tau in range(instance.t - 1):
        q = instance.displacement.apply(tau, images[-1])
        if q is None:
            return None
        images.append(q)
    return images


def tomdisplacetrac(instance: TomographyInstance, node_budget: Optional[int] = None) -> TrackSet:
    """Reconstruct all frames of an instance whose particles follow a known displacement field.

    Only frame-0 candidates whose successive images stay on the later
    frames' candidates are kept; each frame's X-ray rows are imposed on the
    images of those candidates and a zero-objective ILP picks the start set.

    Raises:
        InputError: if no displacement field is given, or the instance has windows
        InfeasibleError: if no start set is compatible with the field
    """
    field = instance.displacement
    if field is None:
        raise InputError("displacement tracking needs a displacement field")
    if instance.windows:
        raise InputError("displacement tracking does not take window constraints")
    if instance.n == 0:
        return TrackSet.from_paths([], t=instance.t, objective=0)
    if field.is_affine and not field.is_proper(instance.directions):
        logger.warning("displacement field is not proper for the X-ray directions")
    if node_budget is None:
        node_budget = get_config().NODE_BUDGET

    pullback: List[Tuple[Point, List[Point]]] = []
    for g in instance.candidates(0).points:
        images = _composed_images(instance, g)
        if images is None:
            continue
        if all(instance.candidates(tau).index_of(q) is not None for tau, q in enumerate(images)):
            pullback.append((g, images))
    logger.info("displacement pullback keeps %d of %d frame-0 candidates", len(pullback), len(instance.candidates(0)))
    if not pullback:
        raise InfeasibleError("no frame-0 candidate maps onto every later grid")

    lp = LinearProgram()
    cols = [lp.add_variable(0, 0, 1, name=f"x_{k}") for k in range(len(pullback))]
    for tau in range(instance.t):
        for k, (f, s) in enumerate(zip(instance.frames[tau], instance.directions)):
            for anchor in f.anchors():
                row = {cols[m]: 1 for m, (_, images) in enumerate(pullback)
                       if canonical_anchor(s, images[tau]) == anchor}
                lp.add_row(row, EQ, f.lines[anchor])
    outcome = solve_ilp(IlpModel(lp, frozenset(cols)), node_budget)
    if outcome.status == Status.BUDGET_EXHAUSTED:
        raise BudgetExhaustedError(f"branch-and-bound stopped after {outcome.nodes} nodes")
    if outcome.status != Status.OPTIMAL:
        raise InfeasibleError("no start set is compatible with the displacement field")

    paths = [tuple(images) for m, (_, images) in enumerate(pullback) if outcome.primal[cols[m]] == 1]
    result = TrackSet.from_paths(paths, t=instance.t)
    for tau, frame in enumerate(result.frames):
        if not instance.realizes(tau, frame):
            raise SolverError(f"displacement solution misses the X-rays of frame {tau}")
    result.objective = instance.weights.objective(instance, result.paths())
    return result
