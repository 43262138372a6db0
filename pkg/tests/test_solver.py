import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from dyntomo.errors import InfeasibleError, InputError
from dyntomo.frames import stacked_matrix
from dyntomo.models import WindowConstraint
from dyntomo.solver import (EQ, FORBIDDEN, GE, LE, IlpModel, LinearProgram, Status, assignment_lp, determinant,
                            min_weight_perfect_matching, solve_ilp, solve_lp, tu_probe, tu_violation)


def two_var_lp(costs, upper=1):
    lp = LinearProgram()
    for c in costs:
        lp.add_variable(c, 0, upper)
    return lp


def test_lp_fractional_vertex():
    lp = two_var_lp([-1, -1])
    lp.add_row({0: 1, 1: 1}, LE, F(3, 2))
    out = solve_lp(lp)
    assert out.status == Status.OPTIMAL
    assert out.objective == F(-3, 2)
    assert lp.violations(out.primal) == []
    assert sorted(out.primal) == [F(1, 2), 1]


def test_lp_equality_and_ge():
    lp = two_var_lp([1, 2])
    lp.add_row({0: 1, 1: 1}, EQ, 1)
    out = solve_lp(lp)
    assert out.primal == [1, 0]
    assert out.objective == 1

    lp = two_var_lp([3, 1])
    lp.add_row({0: 1, 1: 1}, GE, F(3, 2))
    out = solve_lp(lp)
    assert out.primal == [F(1, 2), 1]
    assert out.objective == F(5, 2)


def test_lp_infeasible_and_unbounded():
    lp = two_var_lp([0])
    lp.add_row({0: 1}, GE, 2)
    assert solve_lp(lp).status == Status.INFEASIBLE

    lp = two_var_lp([-1], upper=None)
    assert solve_lp(lp).status == Status.UNBOUNDED


def test_lp_empty_row_is_infeasible_when_rhs_positive():
    lp = two_var_lp([0])
    lp.add_row({}, EQ, 1)
    assert solve_lp(lp).status == Status.INFEASIBLE


def test_lp_rejects_bad_input():
    lp = LinearProgram()
    with pytest.raises(InputError):
        lp.add_variable(0, 2, 1)
    lp.add_variable()
    with pytest.raises(InputError):
        lp.add_row({0: 1}, "<", 1)


def test_matching_small():
    result = min_weight_perfect_matching([[4, 1, 3], [2, 0, 5], [3, 2, 2]])
    assert result.permutation == (1, 0, 2)
    assert result.value == 5


def test_matching_prefers_lexicographically_smallest():
    assert min_weight_perfect_matching([[0] * 3] * 3).permutation == (0, 1, 2)
    assert min_weight_perfect_matching([[1, 1], [1, 1]]).permutation == (0, 1)
    assert min_weight_perfect_matching([[2, 1, 1], [1, 2, 1], [1, 1, 2]]).permutation == (1, 2, 0)


def test_matching_forbidden_edges():
    result = min_weight_perfect_matching([[FORBIDDEN, 1], [1, FORBIDDEN]])
    assert result.permutation == (1, 0)
    assert result.value == 2
    with pytest.raises(InfeasibleError):
        min_weight_perfect_matching([[FORBIDDEN, 1], [FORBIDDEN, 1]])


def test_matching_agrees_with_scipy():
    rng = np.random.default_rng(5)
    for _ in range(30):
        n = int(rng.integers(1, 7))
        costs = rng.integers(0, 30, size=(n, n))
        rows, cols = linear_sum_assignment(costs)
        result = min_weight_perfect_matching([[F(int(v), 3) for v in row] for row in costs])
        assert result.value == F(int(costs[rows, cols].sum()), 3)


def test_assignment_lp_vertex_is_integral():
    rng = np.random.default_rng(9)
    for _ in range(10):
        n = int(rng.integers(2, 5))
        weights = [[F(int(v)) for v in row] for row in rng.integers(0, 10, size=(n, n))]
        weights[0][0] = FORBIDDEN
        out = solve_lp(assignment_lp(weights))
        assert out.optimal
        assert out.is_integral()
        assert out.objective == min_weight_perfect_matching(weights).value


def knapsack():
    lp = LinearProgram()
    for value in (5, 4, 3):
        lp.add_variable(-value, 0, 1)
    lp.add_row({0: 2, 1: 3, 2: 1}, LE, 5)
    return IlpModel(lp, frozenset(range(3)))


def test_ilp_branch_and_bound():
    out = solve_ilp(knapsack())
    assert out.status == Status.OPTIMAL
    assert out.primal == [1, 1, 0]
    assert out.objective == -9
    assert out.nodes > 1


def test_ilp_budget():
    out = solve_ilp(knapsack(), node_budget=1)
    assert out.status == Status.BUDGET_EXHAUSTED


def test_ilp_infeasible_although_lp_feasible():
    lp = LinearProgram()
    lp.add_variable()
    lp.add_variable()
    lp.add_row({0: 1, 1: 1}, EQ, 1)
    lp.add_row({0: 1, 1: -1}, EQ, 0)
    assert solve_lp(lp).optimal
    assert solve_ilp(IlpModel(lp, frozenset({0, 1}))).status == Status.INFEASIBLE


def test_ilp_requires_binary_bounds():
    lp = LinearProgram()
    lp.add_variable(0, 0, None)
    with pytest.raises(InputError):
        IlpModel(lp, frozenset({0}))


def random_binary_program(rng):
    lp = LinearProgram()
    n = int(rng.integers(1, 7))
    for _ in range(n):
        lp.add_variable(int(rng.integers(-5, 6)), 0, 1)
    for _ in range(int(rng.integers(1, 5))):
        coefficients = {j: int(rng.integers(-2, 3)) for j in range(n)}
        lp.add_row(coefficients, (LE, EQ, GE)[int(rng.integers(0, 3))], int(rng.integers(-1, 4)))
    return lp


def enumerate_binary_optimum(lp):
    best = None
    for x in itertools.product((F(0), F(1)), repeat=lp.num_vars):
        if not lp.violations(list(x)):
            value = lp.objective_value(x)
            if best is None or value < best:
                best = value
    return best


def test_ilp_matches_enumeration_on_random_programs():
    rng = np.random.default_rng(101)
    infeasible = 0
    for _ in range(200):
        lp = random_binary_program(rng)
        out = solve_ilp(IlpModel(lp, frozenset(range(lp.num_vars))))
        expected = enumerate_binary_optimum(lp)
        if expected is None:
            infeasible += 1
            assert out.status == Status.INFEASIBLE
        else:
            assert out.status == Status.OPTIMAL
            assert out.objective == expected
            assert not lp.violations(out.primal)
    assert 0 < infeasible < 200


def test_determinant():
    assert determinant([[1, 2], [3, 4]]) == -2
    assert determinant([[0, 1], [1, 0]]) == -1
    assert determinant([[1, 2], [2, 4]]) == 0
    assert determinant([[0, 0, 1], [0, 1, 0], [1, 0, 0]]) == -1
    assert determinant([[F(1, 2), 0], [0, 4]]) == 2
    assert determinant([]) == 1


def test_determinant_matches_numpy():
    rng = np.random.default_rng(23)
    for _ in range(100):
        size = int(rng.integers(1, 6))
        matrix = rng.integers(-3, 4, size=(size, size))
        det = determinant(matrix.tolist())
        assert det.denominator == 1
        assert det == round(np.linalg.det(matrix))


def test_tu_violation_finds_odd_cycle():
    odd_cycle = [[1, 1, 0], [0, 1, 1], [1, 0, 1]]
    rows, cols, det = tu_violation(odd_cycle)
    assert abs(det) == 2
    assert not tu_probe(odd_cycle)


def test_xray_matrices_are_totally_unimodular(grid1):
    assert tu_probe(stacked_matrix(grid1.frames[1], grid1.grid(1)))
    weights = [[math.inf if (i + j) % 3 == 0 else 1 for j in range(3)] for i in range(3)]
    assert tu_probe(assignment_lp(weights).dense_matrix())


def test_overlapping_windows_break_total_unimodularity(grid1):
    grid = grid1.grid(1)
    # (0,0)-(1,1), (1,1)-(10,10) and (0,0)-(10,10) overlap pairwise
    diagonal = [WindowConstraint(1, cells, "<=", 1) for cells in ({0, 4}, {4, 8}, {0, 8})]
    matrix = stacked_matrix(grid1.frames[1], grid, diagonal)
    # rows: y=0, y=1, y=10, x=0, x=1, x=10, then the three windows
    assert abs(determinant([[matrix[r][c] for c in (0, 1, 4)] for r in (6, 3, 1)])) == 2
    assert abs(determinant([[matrix[r][c] for c in (0, 4, 8)] for r in (6, 7, 8)])) == 2
    assert not tu_probe(matrix, trials=50000, max_order=3)
    assert tu_probe(stacked_matrix(grid1.frames[1], grid, [WindowConstraint(1, {0, 3}, "<=", 1)]))
