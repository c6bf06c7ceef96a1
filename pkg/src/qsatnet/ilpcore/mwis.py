"""Exact maximum-weight independent set on small conflict graphs."""

from __future__ import annotations

from ..errors import SizeLimitError, StructuralError

DEFAULT_VERTEX_LIMIT = 32


def mwis_exact(
    vertex_weights,
    edges,
    vertex_limit: int = DEFAULT_VERTEX_LIMIT,
) -> tuple[list[int], float]:
    """Branch and bound over bitmask vertex sets.

    The bound adds every remaining positive weight, so nonpositive
    vertices are never branched into the set.  Vertices are considered in
    index order and the first optimum found is kept, which makes the
    returned set the lexicographically smallest among ties.
    """
    n = len(vertex_weights)
    if n > vertex_limit:
        raise SizeLimitError(
            f"{n} vertices exceeds the exact-search limit {vertex_limit}"
        )
    weights = [float(w) for w in vertex_weights]
    adjacency = [0] * n
    for a, b in edges:
        if not (0 <= a < n and 0 <= b < n):
            raise StructuralError(f"edge ({a}, {b}) references a missing vertex")
        if a == b:
            raise StructuralError(f"self-loop on vertex {a}")
        adjacency[a] |= 1 << b
        adjacency[b] |= 1 << a

    best_weight = 0.0
    best_set = 0

    def positive_remaining(avail: int) -> float:
        total = 0.0
        while avail:
            v = (avail & -avail).bit_length() - 1
            if weights[v] > 0.0:
                total += weights[v]
            avail &= avail - 1
        return total

    def explore(avail: int, current_weight: float, current_set: int) -> None:
        nonlocal best_weight, best_set
        if current_weight > best_weight:
            best_weight = current_weight
            best_set = current_set
        if not avail:
            return
        if current_weight + positive_remaining(avail) <= best_weight:
            return
        v = (avail & -avail).bit_length() - 1
        bit = 1 << v
        if weights[v] > 0.0:
            explore(avail & ~bit & ~adjacency[v], current_weight + weights[v], current_set | bit)
        explore(avail & ~bit, current_weight, current_set)

    explore((1 << n) - 1, 0.0, 0)
    selected = [v for v in range(n) if best_set & (1 << v)]
    return selected, best_weight
