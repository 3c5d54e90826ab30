"""End-to-end training: pretoken table -> graph -> LP -> rounding -> tokeniser."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

from .corpus import DEFAULT_PRESET, PretokenTable
from .lp import LpProblem, LpSolution, SolverOptions, assemble_lp, solve_pdhg
from .rounding import RoundingScheme, resegment
from .tokeniser import SpecialToken, Tokeniser, from_colour_choice
from .tokgraph import EdgePolicy, TokenisationGraph, build_graph

logger = logging.getLogger(__name__)


@dataclass
class TrainResult:
    tokeniser: Tokeniser
    graph: TokenisationGraph
    problem: LpProblem
    solution: LpSolution
    objective: int  # weighted token count after rounding and re-segmentation


def train_convextok(
    table: PretokenTable,
    budget: int,
    rounding: RoundingScheme | None = None,
    policy: EdgePolicy | None = None,
    solver: SolverOptions | None = None,
    specials: Iterable[SpecialToken | str] = (),
    pretokenizer_preset: str = DEFAULT_PRESET,
    pattern: str | None = None,
) -> TrainResult:
    rounding = rounding or RoundingScheme()
    solver = solver or SolverOptions()
    graph = build_graph(table, policy)
    problem = assemble_lp(graph, budget)
    logger.info("LP: %d cols (%d free, %d priced, %d colours), %d eq rows, %d ub rows",
                problem.n_cols, problem.n_free, problem.n_priced, problem.n_colour,
                problem.n_eq, problem.n_ub)
    solution = solve_pdhg(problem, solver)
    if not solution.converged:
        logger.warning("PDHG stopped at max_iters=%d without meeting tolerances", solver.max_iters)
    chosen = rounding.apply(solution.c, graph.colours, budget)
    objective, _ = resegment(graph, chosen)

    provenance = {
        "graph_hash": graph.graph_hash(),
        "edge_policy": graph.policy.to_dict(),
        "lp_value": solution.objective,
        "lp_dual_value": solution.dual_value,
        "train_objective": objective,
        "total_bytes": table.total_bytes,
        "solver": {
            "iters": solution.iterations,
            "gap": solution.gap,
            "rel_gap": solution.rel_gap,
            "gap_mode": solver.gap_mode,
            "gap_tol": solver.gap_tol,
            "converged": solution.converged,
            "restarts": solution.restarts,
            "primal_residual": solution.primal_residual,
        },
        "integrality": solution.integrality_stats(budget),
    }
    if rounding.kind == "int":
        provenance["int_threshold"] = rounding.int_threshold
    tok = from_colour_choice(
        chosen,
        graph.colours,
        specials,
        method="convextok",
        rounding=rounding.kind,
        budget=budget,
        pretokenizer_preset=pretokenizer_preset,
        pattern=pattern,
        provenance=provenance,
    )
    return TrainResult(tok, graph, problem, solution, objective)
