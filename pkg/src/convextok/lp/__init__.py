"""LP relaxation: assembly, first-order solver and the exact IP oracle."""

from .oracle import brute_force_ip
from .pdhg import LpSolution, SolverOptions, duality_gap, solve_pdhg
from .problem import LpProblem, assemble_lp, write_lp

__all__ = [
    "LpProblem",
    "LpSolution",
    "SolverOptions",
    "assemble_lp",
    "brute_force_ip",
    "duality_gap",
    "solve_pdhg",
    "write_lp",
]
