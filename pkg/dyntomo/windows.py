"""Tomography under window constraints.

Windows are cardinality rows over subsets of a frame's grid.  Two classes
are detected syntactically: disjoint windows that each lie inside one X-ray
line keep the stacked matrix totally unimodular (solved as an LP), and the
2x2-block equality windows on a [2q]^2 grid (solved by block-wise
branch-and-bound).  Anything else goes to the general ILP.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Sequence

from dyntomo import get_config
from dyntomo.errors import BudgetExhaustedError, InfeasibleError, InputError, SolverError
from dyntomo.frames import frame_program
from dyntomo.geometry import COORDINATE_DIRECTIONS, Grid, Point, XRayData
from dyntomo.models import TomographyInstance, TrackSet, WindowConstraint
from dyntomo.solver.ilp import IlpModel, solve_ilp
from dyntomo.solver.lp import Status, solve_lp

logger = logging.getLogger(__name__)


class WindowClass(Enum):
    TU_ORTHOGONAL = "tu-orthogonal"
    SUPERRES_2X2 = "superres-2x2"
    GENERAL = "general"


@dataclass
class FrameSolution:
    status: Status
    points: List[Point] = field(default_factory=list)
    indices: List[int] = field(default_factory=list)
    window_class: Optional[WindowClass] = None
    objective: Optional[Fraction] = None

    @property
    def feasible(self) -> bool:
        return self.status == Status.OPTIMAL


def _within_one_line(grid: Grid, window) -> bool:
    for k in range(len(grid.directions)):
        if len({grid.point_lines[i][k] for i in window}) == 1:
            return True
    return False


def _block_layout(grid: Grid):
    """Return the 2x2 blocks of a [2q]^2 integer grid, or None."""
    if tuple(grid.directions[:2]) != COORDINATE_DIRECTIONS or not grid.points:
        return None
    xs = sorted({p[0] for p in grid.points})
    ys = sorted({p[1] for p in grid.points})
    size = len(xs)
    if size % 2 or len(ys) != size or len(grid.points) != size * size:
        return None
    for axis in (xs, ys):
        if any(v.denominator != 1 for v in axis) or axis[-1] - axis[0] != size - 1:
            return None
    blocks = []
    for bx in range(0, size, 2):
        for by in range(0, size, 2):
            cells = [(xs[bx + dx], ys[by + dy]) for dx in (0, 1) for dy in (0, 1)]
            blocks.append(frozenset(grid.index_of(c) for c in cells))
    return blocks


def classify_windows(grid: Grid, constraints: Sequence[WindowConstraint]) -> WindowClass:
    """Route a frame's windows to the TU, superresolution or general class."""
    windows = [c.window for c in constraints]
    disjoint = sum(len(w) for w in windows) == len(frozenset().union(*windows)) if windows else True
    if disjoint and all(_within_one_line(grid, w) for w in windows):
        return WindowClass.TU_ORTHOGONAL
    blocks = _block_layout(grid)
    if blocks is not None and len(constraints) == len(blocks) \
            and all(c.relation == "=" for c in constraints) \
            and set(windows) == set(blocks):
        return WindowClass.SUPERRES_2X2
    return WindowClass.GENERAL


def solve_windowed_frame(grid: Grid, xrays: Sequence[XRayData], constraints: Sequence[WindowConstraint],
                         costs: Optional[Sequence] = None, node_budget: Optional[int] = None) -> FrameSolution:
    """Find a point set with the given X-rays that satisfies every window.

    The TU class is solved as an LP and its vertex must come out integral;
    the other classes use branch-and-bound.  The objective defaults to zero.
    """
    window_class = classify_windows(grid, constraints)
    lp = frame_program(xrays, grid, costs, constraints)
    if window_class == WindowClass.TU_ORTHOGONAL:
        outcome = solve_lp(lp)
        if outcome.optimal and not outcome.is_integral():
            raise SolverError("LP vertex of a totally unimodular window system is fractional")
    else:
        groups = None
        if window_class == WindowClass.SUPERRES_2X2:
            groups = [sorted(c.window) for c in sorted(constraints, key=lambda c: min(c.window))]
        if node_budget is None:
            node_budget = get_config().NODE_BUDGET
        outcome = solve_ilp(IlpModel(lp, frozenset(range(len(grid))), groups), node_budget)
    logger.debug("windowed frame (%s): %s", window_class.value, outcome.status.value)
    if outcome.primal is None or outcome.status != Status.OPTIMAL:
        return FrameSolution(outcome.status, window_class=window_class)
    indices = [i for i in range(len(grid)) if outcome.primal[i] == 1]
    return FrameSolution(Status.OPTIMAL, grid.subset(indices), indices, window_class, outcome.objective)


def select_frame(instance: TomographyInstance, tau: int, costs: Optional[Sequence] = None,
                 node_budget: Optional[int] = None) -> List[Point]:
    """Pick F^(tau): the known positions, else an optimal vertex of the frame LP.

    Windows attached to the frame are honored through solve_windowed_frame.

    Raises:
        InfeasibleError: if no realization exists
        BudgetExhaustedError: if a windowed frame ran out of nodes
    """
    if instance.is_known(tau):
        return list(instance.known_positions[tau])
    grid = instance.grid(tau)
    constraints = instance.windows.get(tau, [])
    solution = solve_windowed_frame(grid, instance.frames[tau], constraints, costs, node_budget)
    if solution.status == Status.BUDGET_EXHAUSTED:
        raise BudgetExhaustedError(f"frame {tau} exhausted its node budget")
    if not solution.feasible:
        raise InfeasibleError("no point set realizes the X-rays", frame=tau)
    return solution.points


def check_frames(instance: TomographyInstance, workers: int = 1, node_budget: Optional[int] = None):
    """Solve every windowed frame on its own and report the first infeasible one."""
    frames = sorted(instance.windows)

    def solve(tau):
        return solve_windowed_frame(instance.grid(tau), instance.frames[tau], instance.windows[tau],
                                    node_budget=node_budget)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve, frames))
    else:
        results = [solve(tau) for tau in frames]
    for tau, solution in zip(frames, results):
        if solution.status == Status.BUDGET_EXHAUSTED:
            raise BudgetExhaustedError(f"frame {tau} exhausted its node budget")
        if not solution.feasible:
            raise InfeasibleError("window constraints cannot be met", frame=tau)
    return dict(zip(frames, results))


WINDOWED_ALGORITHMS = ("ilp", "tomofit", "tomopathfit", "rolling")


def windowed_tracking(instance: TomographyInstance, algorithm: str = "ilp", workers: int = 1,
                      node_budget: Optional[int] = None, **options) -> TrackSet:
    """Track an instance whose frames carry window constraints.

    Every windowed frame is checked on its own first; the chosen tracking
    algorithm then runs with the window rows injected into its frame models.
    """
    # Avoid circular import issues
    from dyntomo import fitting, tracking

    if algorithm not in WINDOWED_ALGORITHMS:
        raise InputError(f"windowed tracking does not support algorithm {algorithm!r}")
    for tau, constraints in instance.windows.items():
        if instance.is_known(tau):
            known = [instance.grid(tau).index_of(p) for p in instance.known_positions[tau]]
            if not all(c.satisfied_by(known) for c in constraints):
                raise InfeasibleError("known positions violate the window constraints", frame=tau)
    check_frames(instance, workers, node_budget)

    if algorithm == "ilp":
        result = tracking.tomtrac_ilp(instance, node_budget=node_budget)
    elif algorithm == "tomofit":
        result = fitting.tomographic_fitting(instance, **options)
    elif algorithm == "tomopathfit":
        result = fitting.tomographic_path_fitting(instance, **options)
    else:
        result = tracking.rolling_horizon(instance, **options)
    result.diagnostics["window_classes"] = {
        tau: classify_windows(instance.grid(tau), cs).value for tau, cs in sorted(instance.windows.items())}
    return result
