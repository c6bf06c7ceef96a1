"""Self-contained optimization engine for per-slot assignment problems.

Dense two-phase simplex, branch-and-bound integer programming, Hungarian
assignment, exact maximum-weight independent set, and a brute-force
enumeration oracle.  Instances here are desk-scale (hundreds of variables),
so everything favors clarity and determinism over solver heroics.  The
entry points take and return plain value types, which leaves a seam for
swapping in an external solver later.
"""

from .types import (
    GAP_LIMIT,
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    LinearProgram,
    MipProblem,
    SolveResult,
    constraint_violations,
)
from .lp import solve_lp
from .mip import brute_force_mip, solve_mip
from .matching import hungarian
from .mwis import mwis_exact

__all__ = [
    "GAP_LIMIT",
    "INFEASIBLE",
    "OPTIMAL",
    "UNBOUNDED",
    "LinearProgram",
    "MipProblem",
    "SolveResult",
    "brute_force_mip",
    "constraint_violations",
    "hungarian",
    "mwis_exact",
    "solve_lp",
    "solve_mip",
]
