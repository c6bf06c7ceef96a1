"""Maximum-weight bipartite matching via shortest augmenting paths."""

from __future__ import annotations

import math

import numpy as np

from ..errors import StructuralError

FORBIDDEN_COST = 1e30


def hungarian(weights) -> tuple[dict[int, int], float]:
    """Maximum-total-weight partial matching on a dense weight matrix.

    Cells holding -inf are forbidden and never matched; negative and zero
    weights simply stay unmatched, since leaving a row out contributes
    nothing.  Runs the O(n^3) potential/augmenting-path method on a square
    matrix padded with zero-cost dummies, one per row and column, so every
    partial matching corresponds to a perfect matching of the padded
    problem.
    """
    num_rows = len(weights)
    num_cols = len(weights[0]) if num_rows else 0
    for i, row in enumerate(weights):
        if len(row) != num_cols:
            raise StructuralError(f"row {i}: ragged weight matrix")
        for value in row:
            if math.isnan(value) or value == math.inf:
                raise StructuralError(f"row {i}: weight must be finite or -inf")
    if num_rows == 0 or num_cols == 0:
        return {}, 0.0

    n = num_rows + num_cols
    cost = np.zeros((n + 1, n + 1))
    for i in range(num_rows):
        for j in range(num_cols):
            w = weights[i][j]
            cost[i + 1, j + 1] = FORBIDDEN_COST if w == -math.inf else -w

    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match_row = np.zeros(n + 1, dtype=int)
    way = np.zeros(n + 1, dtype=int)
    for i in range(1, n + 1):
        match_row[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match_row[j0]
            reduced = cost[i0, 1:] - u[i0] - v[1:]
            free = ~used[1:]
            better = free & (reduced < minv[1:])
            minv_view = minv[1:]
            way_view = way[1:]
            minv_view[better] = reduced[better]
            way_view[better] = j0
            masked = np.where(free, minv_view, np.inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            u[match_row[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if match_row[j0] == 0:
                break
        while j0:
            j1 = int(way[j0])
            match_row[j0] = match_row[j1]
            j0 = j1

    matching: dict[int, int] = {}
    total = 0.0
    pairs = []
    for j in range(1, num_cols + 1):
        i = int(match_row[j])
        if 1 <= i <= num_rows and cost[i, j] < FORBIDDEN_COST / 2:
            pairs.append((i - 1, j - 1))
    for i, j in sorted(pairs):
        matching[i] = j
        total += weights[i][j]
    return matching, total
