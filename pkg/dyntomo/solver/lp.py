"""Exact rational bounded-variable primal simplex.

Every variable carries finite lower and (optionally infinite) upper bounds;
nonbasic variables always sit at one of their bounds, so the returned primal
is a vertex of the feasible polyhedron.  Phase 1 drives artificial variables
to zero, phase 2 minimizes the real objective.  Pivoting follows Bland's rule
(smallest eligible index enters, smallest basic index leaves on ties).
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

from dyntomo.errors import DimensionMismatchError, InputError, SolverError

logger = logging.getLogger(__name__)

LE, EQ, GE = "<=", "=", ">="
RELATIONS = (LE, EQ, GE)

ZERO = Fraction(0)
ONE = Fraction(1)


class Status(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass
class LinearProgram:
    """min c.x  s.t.  row_i . x (<=|=|>=) rhs_i,  lower <= x <= upper.

    Rows are sparse dicts {column: coefficient}.  An upper bound of None
    means +infinity.
    """
    objective: List[Fraction] = field(default_factory=list)
    rows: List[Dict[int, Fraction]] = field(default_factory=list)
    relations: List[str] = field(default_factory=list)
    rhs: List[Fraction] = field(default_factory=list)
    lower: List[Fraction] = field(default_factory=list)
    upper: List[Optional[Fraction]] = field(default_factory=list)
    names: List[str] = field(default_factory=list)

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def add_variable(self, cost=0, lower=0, upper=1, name: str = "") -> int:
        lower = Fraction(lower)
        upper = None if upper is None else Fraction(upper)
        if upper is not None and upper < lower:
            raise InputError(f"variable {name or len(self.objective)} has lower {lower} > upper {upper}")
        self.objective.append(Fraction(cost))
        self.lower.append(lower)
        self.upper.append(upper)
        self.names.append(name or f"x{len(self.objective) - 1}")
        return len(self.objective) - 1

    def add_row(self, coefficients: Dict[int, object], relation: str, rhs) -> int:
        if relation not in RELATIONS:
            raise InputError(f"unknown relation {relation!r}")
        row = {}
        for col, coef in coefficients.items():
            if not 0 <= col < self.num_vars:
                raise DimensionMismatchError(f"row references unknown column {col}")
            coef = Fraction(coef)
            if coef != 0:
                row[col] = row.get(col, ZERO) + coef
        self.rows.append(row)
        self.relations.append(relation)
        self.rhs.append(Fraction(rhs))
        return len(self.rows) - 1

    def copy(self) -> "LinearProgram":
        return LinearProgram(list(self.objective), [dict(r) for r in self.rows], list(self.relations),
                             list(self.rhs), list(self.lower), list(self.upper), list(self.names))

    def with_bounds(self, overrides: Dict[int, tuple]) -> "LinearProgram":
        """Shallow variant sharing rows but with some variable bounds replaced."""
        lower, upper = list(self.lower), list(self.upper)
        for j, (lo, hi) in overrides.items():
            lower[j], upper[j] = Fraction(lo), Fraction(hi)
        return LinearProgram(self.objective, self.rows, self.relations, self.rhs, lower, upper, self.names)

    def dense_matrix(self) -> List[List[Fraction]]:
        return [[row.get(j, ZERO) for j in range(self.num_vars)] for row in self.rows]

    def objective_value(self, x: Sequence) -> Fraction:
        return sum((c * v for c, v in zip(self.objective, x) if c), ZERO)

    def violations(self, x: Sequence) -> List[str]:
        """Human-readable list of violated constraints; empty when x is feasible."""
        problems = []
        if len(x) != self.num_vars:
            return [f"primal has {len(x)} entries, expected {self.num_vars}"]
        for j, v in enumerate(x):
            if v < self.lower[j] or (self.upper[j] is not None and v > self.upper[j]):
                problems.append(f"{self.names[j]}={v} outside bounds")
        for i, row in enumerate(self.rows):
            lhs = sum((coef * x[j] for j, coef in row.items()), ZERO)
            rel, b = self.relations[i], self.rhs[i]
            if (rel == EQ and lhs != b) or (rel == LE and lhs > b) or (rel == GE and lhs < b):
                problems.append(f"row {i}: {lhs} {rel} {b} fails")
        return problems


@dataclass
class SolveOutcome:
    status: Status
    primal: Optional[List[Fraction]] = None
    objective: Optional[Fraction] = None
    basis: Optional[List[int]] = None
    pivots: int = 0
    nodes: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == Status.OPTIMAL

    def is_integral(self, columns: Optional[Sequence[int]] = None) -> bool:
        if self.primal is None:
            return False
        cols = range(len(self.primal)) if columns is None else columns
        return all(self.primal[j].denominator == 1 for j in cols)


class _Tableau:
    """Dense B^-1 A tableau over all structural, slack and artificial columns."""

    def __init__(self, lp: LinearProgram):
        n, m = lp.num_vars, lp.num_rows
        for j in range(n):
            if lp.lower[j] is None:
                raise SolverError("free variables are not supported; give every variable a finite lower bound")
        self.n_struct = n
        cols_lower = list(lp.lower)
        cols_upper = list(lp.upper)
        rows = [dict(r) for r in lp.rows]

        # slacks: <= gets +s, >= gets -s
        for i, rel in enumerate(lp.relations):
            if rel == EQ:
                continue
            col = len(cols_lower)
            cols_lower.append(ZERO)
            cols_upper.append(None)
            rows[i][col] = ONE if rel == LE else -ONE
        self.n_real = len(cols_lower)

        value = list(cols_lower)
        residual = []
        for i, row in enumerate(rows):
            residual.append(lp.rhs[i] - sum((c * value[j] for j, c in row.items()), ZERO))

        self.basis = []
        for i, row in enumerate(rows):
            col = len(cols_lower)
            cols_lower.append(ZERO)
            cols_upper.append(None)
            row[col] = ONE if residual[i] >= 0 else -ONE
            value.append(abs(residual[i]))
            self.basis.append(col)

        self.lower = cols_lower
        self.upper = cols_upper
        self.value = value
        self.ncols = len(cols_lower)
        # rows are already B^-1 A for the all-artificial basis after sign normalization
        self.T = []
        for i, row in enumerate(rows):
            sign = row[self.basis[i]]
            self.T.append({j: c / sign if sign != ONE else c for j, c in row.items()})
        self.pivots = 0

    def reduced_costs(self, cost: List[Fraction]) -> List[Fraction]:
        d = list(cost)
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                for j, coef in self.T[i].items():
                    d[j] -= cb * coef
        return d

    def _pivot(self, r: int, j: int, d: List[Fraction]):
        row_r = self.T[r]
        piv = row_r[j]
        if piv != ONE:
            row_r = {k: c / piv for k, c in row_r.items()}
            self.T[r] = row_r
        items = list(row_r.items())
        for i, row in enumerate(self.T):
            if i == r:
                continue
            f = row.get(j)
            if not f:
                continue
            for k, c in items:
                nv = row.get(k, ZERO) - f * c
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
        f = d[j]
        if f:
            for k, c in items:
                d[k] -= f * c
        self.basis[r] = j
        self.pivots += 1

    def run(self, cost: List[Fraction], max_pivots: Optional[int]) -> Status:
        d = self.reduced_costs(cost)
        basic = set(self.basis)
        while True:
            if max_pivots is not None and self.pivots > max_pivots:
                raise SolverError(f"simplex exceeded {max_pivots} pivots")
            entering, delta = None, 0
            for j in range(self.ncols):
                if j in basic or d[j] == 0:
                    continue
                lo, hi = self.lower[j], self.upper[j]
                if hi is not None and hi == lo:
                    continue
                at_lower = self.value[j] == lo
                if d[j] < 0 and at_lower:
                    entering, delta = j, 1
                    break
                if d[j] > 0 and not at_lower:
                    entering, delta = j, -1
                    break
            if entering is None:
                return Status.OPTIMAL

            j = entering
            flip = None if self.upper[j] is None else self.upper[j] - self.lower[j]
            theta, leave_row, leave_to_lower = None, None, True
            for i, row in enumerate(self.T):
                coef = row.get(j)
                if not coef:
                    continue
                alpha = coef * delta
                b = self.basis[i]
                if alpha > 0:
                    limit = (self.value[b] - self.lower[b]) / alpha
                    to_lower = True
                else:
                    if self.upper[b] is None:
                        continue
                    limit = (self.upper[b] - self.value[b]) / (-alpha)
                    to_lower = False
                if theta is None or limit < theta or (limit == theta and b < self.basis[leave_row]):
                    theta, leave_row, leave_to_lower = limit, i, to_lower
            if flip is not None and (theta is None or flip < theta):
                theta, leave_row = flip, None
            if theta is None:
                return Status.UNBOUNDED

            if theta:
                for i, row in enumerate(self.T):
                    coef = row.get(j)
                    if coef:
                        self.value[self.basis[i]] -= coef * delta * theta
                self.value[j] += delta * theta
            if leave_row is None:
                continue
            b = self.basis[leave_row]
            self.value[b] = self.lower[b] if leave_to_lower else self.upper[b]
            self._pivot(leave_row, j, d)
            basic.discard(b)
            basic.add(j)


def solve_lp(lp: LinearProgram, max_pivots: Optional[int] = None) -> SolveOutcome:
    """Solve lp exactly; the returned primal is a basic (vertex) solution."""
    tab = _Tableau(lp)
    phase1 = [ZERO] * tab.n_real + [ONE] * (tab.ncols - tab.n_real)
    tab.run(phase1, max_pivots)
    infeasibility = sum(tab.value[tab.n_real:], ZERO)
    if infeasibility > 0:
        logger.debug("LP infeasible after phase 1 (residual %s, %d pivots)", infeasibility, tab.pivots)
        return SolveOutcome(Status.INFEASIBLE, pivots=tab.pivots)

    for col in range(tab.n_real, tab.ncols):
        tab.upper[col] = ZERO
    phase2 = list(lp.objective) + [ZERO] * (tab.ncols - tab.n_struct)
    status = tab.run(phase2, max_pivots)
    if status == Status.UNBOUNDED:
        return SolveOutcome(Status.UNBOUNDED, pivots=tab.pivots)

    primal = tab.value[:tab.n_struct]
    problems = lp.violations(primal)
    if problems:
        raise SolverError("simplex returned an infeasible point: " + "; ".join(problems[:3]))
    value = lp.objective_value(primal)
    logger.debug("LP optimal value %s after %d pivots", value, tab.pivots)
    return SolveOutcome(Status.OPTIMAL, primal, value, list(tab.basis), tab.pivots)
