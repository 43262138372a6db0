from dyntomo.solver.lp import EQ, GE, LE, LinearProgram, SolveOutcome, Status, solve_lp
from dyntomo.solver.ilp import IlpModel, solve_ilp
from dyntomo.solver.matching import FORBIDDEN, MatchingResult, assignment_lp, min_weight_perfect_matching
from dyntomo.solver.tu import determinant, tu_probe, tu_violation

__all__ = [
    "EQ", "GE", "LE", "LinearProgram", "SolveOutcome", "Status", "solve_lp",
    "IlpModel", "solve_ilp",
    "FORBIDDEN", "MatchingResult", "assignment_lp", "min_weight_perfect_matching",
    "determinant", "tu_probe", "tu_violation",
]
