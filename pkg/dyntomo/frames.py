"""Per-frame constraint rows shared by the LP and ILP models.

A frame's variables are the points of its grid; `columns[i]` is the LP
column of grid point i.  Each support line of every X-ray gives one
equality row (A x = b), each window constraint one row of its own relation.
"""

from typing import Dict, Optional, Sequence

from dyntomo.geometry import Grid, LineAnchor, XRayData
from dyntomo.solver.lp import EQ, LinearProgram


def add_xray_rows(lp: LinearProgram, xrays: Sequence[XRayData], grid: Grid, columns: Sequence[int]) -> int:
    """Append A^(tau) x = b^(tau); returns the number of rows added.

    A support line without grid points still yields a row (0 = count), so
    the LP reports the frame infeasible instead of silently dropping data.
    """
    added = 0
    for k, f in enumerate(xrays):
        for anchor in f.anchors():
            on_line = grid.points_on(LineAnchor(k, anchor))
            lp.add_row({columns[i]: 1 for i in on_line}, EQ, f.lines[anchor])
            added += 1
    return added


def add_window_rows(lp: LinearProgram, constraints, columns: Sequence[int]) -> int:
    for c in constraints:
        lp.add_row({columns[i]: 1 for i in sorted(c.window)}, c.relation, c.bound)
    return len(constraints)


def frame_program(xrays: Sequence[XRayData], grid: Grid, costs: Optional[Sequence] = None,
                  constraints=()) -> LinearProgram:
    """min a.x s.t. A x = b, window rows, 0 <= x <= 1 over one frame's grid."""
    lp = LinearProgram()
    for i, p in enumerate(grid.points):
        cost = costs[i] if costs is not None else 0
        lp.add_variable(cost, 0, 1, name="xi_" + ",".join(str(c) for c in p))
    columns = list(range(len(grid)))
    add_xray_rows(lp, xrays, grid, columns)
    add_window_rows(lp, constraints, columns)
    return lp


def stacked_matrix(xrays: Sequence[XRayData], grid: Grid, constraints=()) -> list:
    """Dense coefficient matrix of the X-ray rows stacked on the window rows."""
    return frame_program(xrays, grid, None, constraints).dense_matrix()


def selected_indices(primal: Sequence, columns: Dict[int, int]) -> list:
    return sorted(i for i, col in columns.items() if primal[col] == 1)
