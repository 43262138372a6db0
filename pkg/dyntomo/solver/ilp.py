"""Depth-first 0/1 branch-and-bound on top of the exact simplex."""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence

from dyntomo.errors import InputError
from dyntomo.solver.lp import LinearProgram, SolveOutcome, Status, solve_lp

logger = logging.getLogger(__name__)

HALF = Fraction(1, 2)


@dataclass
class IlpModel:
    """A linear program plus the set of columns that must take values in {0, 1}.

    `branch_groups` optionally orders the branching: the first group holding a
    fractional column is branched on before any later group is considered.
    """
    base: LinearProgram
    integrality: FrozenSet[int] = field(default_factory=frozenset)
    branch_groups: Optional[List[Sequence[int]]] = None

    def __post_init__(self):
        self.integrality = frozenset(self.integrality)
        for j in self.integrality:
            lo, hi = self.base.lower[j], self.base.upper[j]
            if lo < 0 or hi is None or hi > 1:
                raise InputError(f"integral column {self.base.names[j]} must be bounded within [0, 1]")


def _pick_branch_column(model: IlpModel, x: List[Fraction]) -> Optional[int]:
    def fractional(j):
        return x[j].denominator != 1

    groups = model.branch_groups or [sorted(model.integrality)]
    for group in groups:
        best, best_score = None, None
        for j in sorted(group):
            if j not in model.integrality or not fractional(j):
                continue
            frac = x[j] - (x[j].numerator // x[j].denominator)
            score = min(frac, 1 - frac)
            if best_score is None or score > best_score:
                best, best_score = j, score
        if best is not None:
            return best
    return None


def solve_ilp(model: IlpModel, node_budget: Optional[int] = None) -> SolveOutcome:
    """Exact optimum of a 0/1 ILP by LP-based branch-and-bound.

    Depth-first search; branches on the most fractional integral column
    (lowest index on ties), exploring the side nearer the LP value first.
    Nodes whose LP bound is not strictly better than the incumbent are pruned.

    Args:
        model: the ILP to solve
        node_budget: maximum number of LP relaxations; None for no limit

    Returns:
        SolveOutcome with status OPTIMAL, INFEASIBLE, UNBOUNDED or
        BUDGET_EXHAUSTED (the latter may still carry the best incumbent)
    """
    incumbent: Optional[SolveOutcome] = None
    stack: List[Dict[int, tuple]] = [{}]
    nodes = 0
    pivots = 0
    while stack:
        if node_budget is not None and nodes >= node_budget:
            logger.warning("branch-and-bound stopped after %d nodes", nodes)
            if incumbent is not None:
                return SolveOutcome(Status.BUDGET_EXHAUSTED, incumbent.primal, incumbent.objective,
                                    incumbent.basis, pivots, nodes)
            return SolveOutcome(Status.BUDGET_EXHAUSTED, pivots=pivots, nodes=nodes)
        fixes = stack.pop()
        nodes += 1
        lp = model.base.with_bounds(fixes) if fixes else model.base
        relaxed = solve_lp(lp)
        pivots += relaxed.pivots
        if relaxed.status == Status.INFEASIBLE:
            continue
        if relaxed.status == Status.UNBOUNDED:
            if not fixes:
                return SolveOutcome(Status.UNBOUNDED, pivots=pivots, nodes=nodes)
            continue
        if incumbent is not None and relaxed.objective >= incumbent.objective:
            continue
        j = _pick_branch_column(model, relaxed.primal)
        if j is None:
            incumbent = relaxed
            logger.debug("incumbent %s at node %d", relaxed.objective, nodes)
            continue
        down = dict(fixes)
        down[j] = (0, 0)
        up = dict(fixes)
        up[j] = (1, 1)
        # last pushed is explored first
        if relaxed.primal[j] >= HALF:
            stack.extend([down, up])
        else:
            stack.extend([up, down])

    if incumbent is None:
        return SolveOutcome(Status.INFEASIBLE, pivots=pivots, nodes=nodes)
    return SolveOutcome(Status.OPTIMAL, incumbent.primal, incumbent.objective, incumbent.basis, pivots, nodes)
