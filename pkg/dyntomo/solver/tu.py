"""Sampled total-unimodularity check.

A testing utility, not a decision procedure: it looks at random square
submatrices and reports the first determinant outside {-1, 0, 1}.
"""

import logging
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)


def determinant(matrix: Sequence[Sequence]) -> Fraction:
    """Exact determinant by Bareiss fraction-free elimination.

    Integer input stays integral in every intermediate step; rational input
    (displacement matrices) goes through the same exact divisions.
    """
    a = [[Fraction(v) for v in row] for row in matrix]
    n = len(a)
    if n == 0:
        return Fraction(1)
    sign = 1
    prev = Fraction(1)
    for k in range(n - 1):
        if a[k][k] == 0:
            pivot = next((r for r in range(k + 1, n) if a[r][k] != 0), None)
            if pivot is None:
                return Fraction(0)
            a[k], a[pivot] = a[pivot], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def tu_violation(matrix: Sequence[Sequence], trials: int = 1000, max_order: int = 5,
                 seed: int = 0) -> Optional[Tuple[List[int], List[int], Fraction]]:
    """Return (rows, cols, det) of the first sampled bad submatrix, else None."""
    m = len(matrix)
    n = len(matrix[0]) if m else 0
    if m == 0 or n == 0:
        return None
    rng = np.random.default_rng(seed)
    top = min(max_order, m, n)
    for _ in range(trials):
        order = int(rng.integers(1, top + 1))
        rows = sorted(int(r) for r in rng.choice(m, size=order, replace=False))
        cols = sorted(int(c) for c in rng.choice(n, size=order, replace=False))
        det = determinant([[matrix[r][c] for c in cols] for r in rows])
        if det not in (-1, 0, 1):
            logger.debug("determinant %s on rows %s cols %s", det, rows, cols)
            return rows, cols, det
    return None


def tu_probe(matrix: Sequence[Sequence], trials: int = 1000, max_order: int = 5, seed: int = 0) -> bool:
    """True when no sampled square submatrix has a determinant outside {-1, 0, 1}."""
    return tu_violation(matrix, trials, max_order, seed) is None
