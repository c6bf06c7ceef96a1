"""Dense two-phase simplex.

Variables are shifted by their lower bounds so the working problem has
x >= 0 throughout; finite upper bounds become explicit rows.  Pivoting is
Dantzig's rule with lowest-index tie-breaks, switching to Bland's rule
after a fixed iteration budget so degenerate instances cannot cycle.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import QsatError
from .types import INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram, SolveResult

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
BLAND_AFTER = 5000
MAX_ITERATIONS = 200_000


def _pivot(tableau: np.ndarray, basis: list[int], row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    pivot_row = tableau[row].copy()
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, pivot_row)
    tableau[row] = pivot_row
    tableau[:, col] = 0.0
    tableau[row, col] = 1.0
    basis[row] = col


def _iterate(
    tableau: np.ndarray, basis: list[int], active_cols: int, iteration: list[int]
) -> str:
    """Run simplex to optimality on the maximization tableau in place.

    The objective row stores z_j - c_j, so the solution is optimal once
    every active entry is >= -PIVOT_TOL.
    """
    m = tableau.shape[0] - 1
    while True:
        iteration[0] += 1
        if iteration[0] > MAX_ITERATIONS:
            raise QsatError("simplex iteration limit exceeded")
        objective = tableau[m, :active_cols]
        if objective.size == 0:
            return OPTIMAL
        bland = iteration[0] > BLAND_AFTER
        if bland:
            negatives = np.flatnonzero(objective < -PIVOT_TOL)
            if negatives.size == 0:
                return OPTIMAL
            col = int(negatives[0])
        else:
            col = int(np.argmin(objective))
            if objective[col] >= -PIVOT_TOL:
                return OPTIMAL
        column = tableau[:m, col]
        positive = column > PIVOT_TOL
        if not positive.any():
            return UNBOUNDED
        ratios = np.full(m, np.inf)
        ratios[positive] = tableau[:m, -1][positive] / column[positive]
        best = ratios.min()
        candidates = np.flatnonzero(ratios <= best + 1e-12)
        if bland:
            row = int(min(candidates, key=lambda i: basis[i]))
        else:
            row = int(candidates[0])
        _pivot(tableau, basis, row, col)


def solve_lp(lp: LinearProgram) -> SolveResult:
    n = lp.num_vars
    lower = np.array([b[0] for b in lp.variable_bounds], dtype=float)
    objective = np.asarray(lp.objective, dtype=float)
    const_term = float(objective @ lower) if n else 0.0

    rows: list[np.ndarray] = []
    relations: list[str] = []
    rhs: list[float] = []
    for coeffs, relation, b in lp.constraints:
        a = np.asarray(coeffs, dtype=float)
        rows.append(a)
        relations.append(relation)
        rhs.append(b - (float(a @ lower) if n else 0.0))
    for j, (lo, hi) in enumerate(lp.variable_bounds):
        if hi is not None:
            unit = np.zeros(n)
            unit[j] = 1.0
            rows.append(unit)
            relations.append("<=")
            rhs.append(hi - lo)

    m = len(rows)
    for i in range(m):
        if rhs[i] < 0:
            rows[i] = -rows[i]
            rhs[i] = -rhs[i]
            if relations[i] == "<=":
                relations[i] = ">="
            elif relations[i] == ">=":
                relations[i] = "<="

    num_slack = sum(1 for r in relations if r in ("<=", ">="))
    num_artificial = sum(1 for r in relations if r in (">=", "="))
    slack_start = n
    art_start = n + num_slack
    total = n + num_slack + num_artificial

    tableau = np.zeros((m + 1, total + 1))
    basis = [0] * m
    slack_idx = slack_start
    art_idx = art_start
    for i in range(m):
        tableau[i, :n] = rows[i]
        tableau[i, -1] = rhs[i]
        if relations[i] == "<=":
            tableau[i, slack_idx] = 1.0
            basis[i] = slack_idx
            slack_idx += 1
        elif relations[i] == ">=":
            tableau[i, slack_idx] = -1.0
            slack_idx += 1
            tableau[i, art_idx] = 1.0
            basis[i] = art_idx
            art_idx += 1
        else:
            tableau[i, art_idx] = 1.0
            basis[i] = art_idx
            art_idx += 1

    iteration = [0]

    if num_artificial:
        # phase 1: maximize minus the artificial sum, canonicalized over
        # the starting basis
        tableau[m, art_start:total] = 1.0
        for i in range(m):
            if basis[i] >= art_start:
                tableau[m] -= tableau[i]
        status = _iterate(tableau, basis, total, iteration)
        if status != OPTIMAL or tableau[m, -1] < -FEAS_TOL:
            return SolveResult(INFEASIBLE, math.nan, None)
        for i in range(m):
            if basis[i] >= art_start:
                structural = np.flatnonzero(np.abs(tableau[i, :art_start]) > PIVOT_TOL)
                if structural.size:
                    _pivot(tableau, basis, i, int(structural[0]))
                else:
                    tableau[i, :] = 0.0

    # phase 2 over structural and slack columns only
    tableau[m, :] = 0.0
    tableau[m, :n] = -objective
    for i in range(m):
        coeff = tableau[m, basis[i]]
        if coeff != 0.0:
            tableau[m] -= coeff * tableau[i]
    status = _iterate(tableau, basis, art_start, iteration)
    if status == UNBOUNDED:
        return SolveResult(UNBOUNDED, math.inf, None)

    shifted = np.zeros(total)
    for i, col in enumerate(basis):
        shifted[col] = tableau[i, -1]
    solution = shifted[:n] + lower
    value = float(tableau[m, -1]) + const_term
    return SolveResult(OPTIMAL, value, tuple(float(x) for x in solution))
