"""Minimum-weight perfect bipartite matching over exact rationals.

O(n^3) Hungarian method with row/column potentials.  Forbidden edges carry
the FORBIDDEN sentinel (math.inf) instead of a big-M weight.  Among all
optimal permutations the lexicographically smallest one is returned: every
optimal matching lives on the tight edges of the final potentials, so we
repair the Hungarian matching greedily along that subgraph.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple

from dyntomo.errors import DimensionMismatchError, InfeasibleError
from dyntomo.solver.lp import EQ, LinearProgram

logger = logging.getLogger(__name__)

FORBIDDEN = math.inf


@dataclass(frozen=True)
class MatchingResult:
    permutation: Tuple[int, ...]  # row i -> column permutation[i], 0-based
    value: Fraction


def _is_forbidden(w) -> bool:
    return isinstance(w, float) and math.isinf(w)


def _validate(weights: Sequence[Sequence]) -> List[List]:
    n = len(weights)
    if n == 0:
        raise DimensionMismatchError("matching needs at least one row")
    matrix = []
    for i, row in enumerate(weights):
        if len(row) != n:
            raise DimensionMismatchError(f"weight matrix row {i} has {len(row)} entries, expected {n}")
        matrix.append([w if _is_forbidden(w) else Fraction(w) for w in row])
    return matrix


def _hungarian(a: List[List]) -> Tuple[List[int], List, List]:
    """Returns (row->col assignment, row potentials u, column potentials v)."""
    n = len(a)
    u = [Fraction(0)] * (n + 1)
    v = [Fraction(0)] * (n + 1)
    p = [0] * (n + 1)  # p[j]: row matched to column j (1-based), 0 = free
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [math.inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta, j1 = math.inf, 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                w = a[i0 - 1][j - 1]
                if not _is_forbidden(w):
                    cur = w - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                if minv[j] < delta:
                    delta, j1 = minv[j], j
            if j1 == 0:
                raise InfeasibleError("every perfect matching uses a forbidden edge")
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    assignment = [0] * n
    for j in range(1, n + 1):
        assignment[p[j] - 1] = j - 1
    return assignment, u[1:], v[1:]


def _lexicographic_repair(tight: List[List[int]], assignment: List[int]) -> List[int]:
    """Lexicographically smallest perfect matching inside the tight-edge graph."""
    n = len(assignment)
    row_of = [0] * n
    for i, j in enumerate(assignment):
        row_of[j] = i
    fixed_cols = set()

    def augment(i, target, seen, first):
        # move row i off its column onto another tight column, ending at `target`
        for j in tight[i]:
            if j in fixed_cols or j in seen or j == first:
                continue
            seen.add(j)
            if j == target or augment(row_of[j], target, seen, first):
                assignment[i] = j
                row_of[j] = i
                return True
        return False

    for i in range(n):
        for j in tight[i]:
            if j in fixed_cols:
                continue
            if assignment[i] == j:
                break
            other = row_of[j]
            freed = assignment[i]
            saved = (list(assignment), list(row_of))
            if augment(other, freed, set(), j):
                assignment[i] = j
                row_of[j] = i
                break
            assignment[:], row_of[:] = saved
        fixed_cols.add(assignment[i])
    return assignment


def min_weight_perfect_matching(weights: Sequence[Sequence]) -> MatchingResult:
    """Minimum-weight perfect matching of a square rational matrix.

    Args:
        weights: n x n matrix of rationals or FORBIDDEN entries

    Returns:
        MatchingResult with the lexicographically smallest optimal permutation

    Raises:
        InfeasibleError: if every perfect matching needs a forbidden edge
    """
    a = _validate(weights)
    n = len(a)
    assignment, u, v = _hungarian(a)
    tight = [[j for j in range(n) if not _is_forbidden(a[i][j]) and a[i][j] - u[i] - v[j] == 0]
             for i in range(n)]
    assignment = _lexicographic_repair(tight, assignment)
    value = sum((a[i][assignment[i]] for i in range(n)), Fraction(0))
    logger.debug("matched %d rows, value %s", n, value)
    return MatchingResult(tuple(assignment), value)


def assignment_lp(weights: Sequence[Sequence]) -> LinearProgram:
    """LP relaxation of the assignment problem: eta[i][j] in [0,1], row and column sums 1.

    Variable eta[i][j] has index i*n + j; forbidden entries are fixed to 0.
    """
    a = _validate(weights)
    n = len(a)
    lp = LinearProgram()
    for i in range(n):
        for j in range(n):
            if _is_forbidden(a[i][j]):
                lp.add_variable(0, 0, 0, name=f"eta_{i}_{j}")
            else:
                lp.add_variable(a[i][j], 0, 1, name=f"eta_{i}_{j}")
    for i in range(n):
        lp.add_row({i * n + j: 1 for j in range(n)}, EQ, 1)
    for j in range(n):
        lp.add_row({i * n + j: 1 for i in range(n)}, EQ, 1)
    return lp
