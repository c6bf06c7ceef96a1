"""Solver tests against enumeration oracles."""

import itertools
import math
import random

import numpy as np
import pytest

from qsatnet.errors import ParameterError, SizeLimitError, StructuralError
from qsatnet.ilpcore import (
    GAP_LIMIT,
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    LinearProgram,
    MipProblem,
    brute_force_mip,
    constraint_violations,
    hungarian,
    mwis_exact,
    solve_lp,
    solve_mip,
)


def lp_vertex_oracle(lp):
    """Enumerate candidate vertices from all n-subsets of tight rows.

    Exhaustive and slow, usable only for a handful of variables; entirely
    separate from the simplex code path.
    """
    n = lp.num_vars
    rows = []
    rhs = []
    for coeffs, relation, b in lp.constraints:
        rows.append(list(coeffs))
        rhs.append(b)
    for j, (lo, hi) in enumerate(lp.variable_bounds):
        unit = [0.0] * n
        unit[j] = 1.0
        rows.append(unit)
        rhs.append(lo)
        if hi is not None:
            rows.append(unit)
            rhs.append(hi)
    best = None
    for subset in itertools.combinations(range(len(rows)), n):
        a = np.array([rows[k] for k in subset])
        b = np.array([rhs[k] for k in subset])
        if abs(np.linalg.det(a)) < 1e-9:
            continue
        x = np.linalg.solve(a, b)
        if not feasible_point(lp, x):
            continue
        value = float(np.dot(lp.objective, x))
        if best is None or value > best:
            best = value
    return best


def feasible_point(lp, x, tol=1e-7):
    return not constraint_violations(lp, tuple(float(v) for v in x), tol=tol)


def test_lp_single_variable():
    lp = LinearProgram(
        objective=(1.0,),
        constraints=(((1.0,), "<=", 5.0),),
        variable_bounds=((0.0, None),),
    )
    res = solve_lp(lp)
    assert res.status == OPTIMAL
    assert res.objective_value == pytest.approx(5.0, abs=1e-9)
    assert res.assignment == pytest.approx((5.0,))


def test_lp_degenerate_optimum():
    lp = LinearProgram(
        objective=(1.0, 1.0),
        constraints=(((1.0, 1.0), "<=", 1.0),),
        variable_bounds=((0.0, None), (0.0, None)),
    )
    res = solve_lp(lp)
    assert res.status == OPTIMAL
    assert res.objective_value == pytest.approx(1.0, abs=1e-9)


def test_lp_infeasible_and_unbounded():
    infeasible = LinearProgram(
        objective=(1.0,),
        constraints=(((1.0,), "<=", 1.0), ((1.0,), ">=", 2.0)),
        variable_bounds=((0.0, None),),
    )
    assert solve_lp(infeasible).status == INFEASIBLE
    unbounded = LinearProgram(
        objective=(1.0,),
        constraints=(),
        variable_bounds=((0.0, None),),
    )
    assert solve_lp(unbounded).status == UNBOUNDED


def test_lp_equality_and_shifted_bounds():
    lp = LinearProgram(
        objective=(2.0, -1.0),
        constraints=(((1.0, 1.0), "=", 4.0),),
        variable_bounds=((1.0, 3.0), (0.0, None)),
    )
    res = solve_lp(lp)
    assert res.status == OPTIMAL
    assert res.assignment == pytest.approx((3.0, 1.0), abs=1e-9)
    assert res.objective_value == pytest.approx(5.0, abs=1e-9)


def test_lp_matches_vertex_oracle():
    rng = random.Random(101)
    for trial in range(20):
        n = rng.randint(2, 4)
        m = rng.randint(1, 4)
        target = [rng.uniform(0.0, 2.0) for _ in range(n)]
        constraints = []
        for _ in range(m):
            coeffs = tuple(rng.uniform(-1.0, 2.0) for _ in range(n))
            slack = rng.uniform(0.1, 2.0)
            rhs = sum(c * x for c, x in zip(coeffs, target)) + slack
            constraints.append((coeffs, "<=", rhs))
        lp = LinearProgram(
            objective=tuple(rng.uniform(-1.0, 3.0) for _ in range(n)),
            constraints=tuple(constraints),
            variable_bounds=tuple((0.0, rng.uniform(2.5, 6.0)) for _ in range(n)),
        )
        res = solve_lp(lp)
        assert res.status == OPTIMAL, f"trial {trial}"
        oracle = lp_vertex_oracle(lp)
        assert oracle is not None
        assert res.objective_value == pytest.approx(oracle, abs=1e-6)
        assert feasible_point(lp, res.assignment)


def test_lp_determinism():
    lp = LinearProgram(
        objective=(1.0, 2.0, 1.0),
        constraints=(
            ((1.0, 1.0, 0.0), "<=", 3.0),
            ((0.0, 1.0, 1.0), "<=", 3.0),
            ((1.0, 0.0, 1.0), "<=", 3.0),
        ),
        variable_bounds=((0.0, None),) * 3,
    )
    first = solve_lp(lp)
    for _ in range(5):
        again = solve_lp(lp)
        assert again == first


def knapsack_mip():
    lp = LinearProgram(
        objective=(5.0, 4.0),
        constraints=(((3.0, 2.0), "<=", 4.0),),
        variable_bounds=((0.0, 1.0), (0.0, 1.0)),
    )
    return MipProblem(base=lp, integer_vars=(0, 1))


def test_mip_knapsack():
    res = solve_mip(knapsack_mip())
    assert res.status == OPTIMAL
    assert res.objective_value == pytest.approx(5.0, abs=1e-9)
    assert res.assignment == (1.0, 0.0)


def test_brute_force_knapsack_and_empty():
    res = brute_force_mip(knapsack_mip())
    assert res.status == OPTIMAL
    assert res.objective_value == pytest.approx(5.0, abs=1e-9)
    empty = MipProblem(
        base=LinearProgram(objective=(), constraints=(), variable_bounds=()),
        integer_vars=(),
    )
    res = brute_force_mip(empty)
    assert res.status == OPTIMAL
    assert res.objective_value == 0.0


def test_mip_integral_relaxation_returned_directly():
    lp = LinearProgram(
        objective=(1.0, 1.0),
        constraints=(((1.0, 0.0), "<=", 2.0), ((0.0, 1.0), "<=", 3.0)),
        variable_bounds=((0.0, 5.0), (0.0, 5.0)),
    )
    res = solve_mip(MipProblem(base=lp, integer_vars=(0, 1)))
    assert res.status == OPTIMAL
    assert res.assignment == (2.0, 3.0)


def random_mip(rng, max_vars=8):
    n = rng.randint(1, max_vars)
    m = rng.randint(1, 4)
    constraints = []
    for _ in range(m):
        coeffs = tuple(float(rng.randint(-3, 5)) for _ in range(n))
        relation = rng.choice(["<=", "<=", "<=", ">="])
        rhs = float(rng.randint(0, 12))
        constraints.append((coeffs, relation, rhs))
    lp = LinearProgram(
        objective=tuple(float(rng.randint(-5, 5)) for _ in range(n)),
        constraints=tuple(constraints),
        variable_bounds=tuple((0.0, float(rng.randint(1, 3))) for _ in range(n)),
    )
    return MipProblem(base=lp, integer_vars=tuple(range(n)))


def test_mip_matches_brute_force():
    rng = random.Random(2024)
    optimal_seen = 0
    for trial in range(200):
        mip = random_mip(rng)
        fast = solve_mip(mip)
        slow = brute_force_mip(mip)
        assert fast.status == slow.status, f"trial {trial}"
        if fast.status == OPTIMAL:
            optimal_seen += 1
            assert fast.objective_value == pytest.approx(
                slow.objective_value, abs=1e-6
            ), f"trial {trial}"
            assert not constraint_violations(
                mip.base, fast.assignment, integer_vars=mip.integer_vars
            )
            # weak duality: the relaxation bounds the integer optimum
            relaxed = solve_lp(mip.base)
            assert relaxed.objective_value >= fast.objective_value - 1e-6
    assert optimal_seen > 100


def test_mip_gap_limit():
    rng = random.Random(5)
    hit_limit = False
    for _ in range(50):
        mip = random_mip(rng, max_vars=6)
        res = solve_mip(mip, node_limit=2)
        if res.status == GAP_LIMIT:
            hit_limit = True
            if res.assignment is not None:
                assert not constraint_violations(
                    mip.base, res.assignment, integer_vars=mip.integer_vars
                )
                assert res.gap >= 0.0
    assert hit_limit


def test_mip_rejects_bad_inputs():
    with pytest.raises(ParameterError):
        solve_mip(knapsack_mip(), node_limit=0)
    unbounded_int = MipProblem(
        base=LinearProgram(
            objective=(1.0,), constraints=(), variable_bounds=((0.0, None),)
        ),
        integer_vars=(0,),
    )
    with pytest.raises(StructuralError):
        solve_mip(unbounded_int)
    with pytest.raises(SizeLimitError):
        brute_force_mip(
            MipProblem(
                base=LinearProgram(
                    objective=(1.0,) * 8,
                    constraints=(),
                    variable_bounds=(((0.0, 100.0),) * 8),
                ),
                integer_vars=tuple(range(8)),
            )
        )


def test_lp_validation():
    with pytest.raises(StructuralError):
        LinearProgram(
            objective=(1.0, 1.0),
            constraints=(((1.0,), "<=", 1.0),),
            variable_bounds=((0.0, None), (0.0, None)),
        )
    with pytest.raises(StructuralError):
        LinearProgram(
            objective=(1.0,),
            constraints=(((1.0,), "<>", 1.0),),
            variable_bounds=((0.0, None),),
        )
    with pytest.raises(StructuralError):
        LinearProgram(
            objective=(1.0,),
            constraints=(),
            variable_bounds=((2.0, 1.0),),
        )


def matching_oracle(weights):
    """Best partial matching by recursion over rows; independent of the
    augmenting-path code."""
    num_cols = len(weights[0]) if weights else 0

    def best_from(row, used_cols):
        if row == len(weights):
            return 0.0
        value = best_from(row + 1, used_cols)
        for j in range(num_cols):
            w = weights[row][j]
            if j in used_cols or w == -math.inf:
                continue
            value = max(value, w + best_from(row + 1, used_cols | {j}))
        return value

    return best_from(0, frozenset())


def test_hungarian_two_by_two():
    matching, total = hungarian([[3.0, 1.0], [2.0, 4.0]])
    assert matching == {0: 0, 1: 1}
    assert total == 7.0


def test_hungarian_diagonal():
    weights = [[1.0 if i == j else 0.0 for j in range(4)] for i in range(4)]
    matching, total = hungarian(weights)
    assert total == 4.0
    assert all(matching[i] == i for i in range(4))


def test_hungarian_matches_permutation_oracle():
    rng = random.Random(77)
    for trial in range(100):
        weights = [[rng.uniform(0.0, 10.0) for _ in range(6)] for _ in range(6)]
        _, total = hungarian(weights)
        oracle = max(
            sum(weights[i][p[i]] for i in range(6))
            for p in itertools.permutations(range(6))
        )
        assert total == pytest.approx(oracle, abs=1e-9), f"trial {trial}"


def test_hungarian_partial_and_forbidden():
    rng = random.Random(13)
    for trial in range(20):
        weights = [
            [
                -math.inf if rng.random() < 0.3 else rng.uniform(-2.0, 8.0)
                for _ in range(5)
            ]
            for _ in range(4)
        ]
        matching, total = hungarian(weights)
        for i, j in matching.items():
            assert weights[i][j] != -math.inf
        cols = list(matching.values())
        assert len(cols) == len(set(cols))
        assert total == pytest.approx(matching_oracle(weights), abs=1e-9), f"trial {trial}"


def test_hungarian_rectangular_and_empty():
    matching, total = hungarian([[5.0, 1.0, 2.0]])
    assert matching == {0: 0}
    assert total == 5.0
    assert hungarian([]) == ({}, 0.0)


def mwis_oracle(weights, edges):
    """Subset-DP enumeration over all vertex subsets."""
    n = len(weights)
    adjacency = [0] * n
    for a, b in edges:
        adjacency[a] |= 1 << b
        adjacency[b] |= 1 << a
    best = 0.0
    independent = bytearray(1 << n)
    independent[0] = 1
    totals = [0.0] * (1 << n)
    for mask in range(1, 1 << n):
        low = (mask & -mask).bit_length() - 1
        rest = mask & (mask - 1)
        if independent[rest] and not (adjacency[low] & mask):
            independent[mask] = 1
            totals[mask] = totals[rest] + weights[low]
            best = max(best, totals[mask])
    return best


def test_mwis_edgeless():
    selected, total = mwis_exact([2.0, 0.0, 3.0, -1.0], [])
    assert selected == [0, 2]
    assert total == 5.0


def test_mwis_single_edge():
    selected, total = mwis_exact([5.0, 3.0], [(0, 1)])
    assert selected == [0]
    assert total == 5.0


def test_mwis_matches_subset_oracle():
    rng = random.Random(99)
    for trial in range(50):
        n = rng.randint(8, 18)
        weights = [rng.uniform(-1.0, 5.0) for _ in range(n)]
        edges = []
        for a in range(n):
            for b in range(a + 1, n):
                if rng.random() < 0.25:
                    edges.append((a, b))
        selected, total = mwis_exact(weights, edges, vertex_limit=18)
        chosen = set(selected)
        for a, b in edges:
            assert not (a in chosen and b in chosen)
        assert total == pytest.approx(mwis_oracle(weights, edges), abs=1e-9), f"trial {trial}"


def test_mwis_limits_and_validation():
    with pytest.raises(SizeLimitError):
        mwis_exact([1.0] * 10, [], vertex_limit=9)
    with pytest.raises(StructuralError):
        mwis_exact([1.0, 1.0], [(0, 2)])
    with pytest.raises(StructuralError):
        mwis_exact([1.0, 1.0], [(1, 1)])
