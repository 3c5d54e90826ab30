"""Sparse LP assembly for the vocabulary-selection relaxation.

Columns are ordered ``[free edges | priced edges | colours]``. Equality rows
are flow conservation, one per vertex; inequality rows are one coupling row
``p_e - c_colour(e) <= 0`` per priced edge followed by the budget row
``sum(c) <= K``. All variables live in ``[0, 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TextIO

import numpy as np
import scipy.sparse as sp

from ..tokgraph import TokenisationGraph

_INDEX_LIMIT = np.iinfo(np.int32).max


@dataclass(frozen=True, eq=False)
class LpProblem:
    budget: int
    c: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    n_free: int
    n_priced: int
    n_colour: int
    graph: TokenisationGraph | None = None

    @property
    def n_cols(self) -> int:
        return self.c.shape[0]

    @property
    def n_eq(self) -> int:
        return self.A_eq.shape[0]

    @property
    def n_ub(self) -> int:
        return self.A_ub.shape[0]

    @property
    def free_cols(self) -> slice:
        return slice(0, self.n_free)

    @property
    def priced_cols(self) -> slice:
        return slice(self.n_free, self.n_free + self.n_priced)

    @property
    def colour_cols(self) -> slice:
        return slice(self.n_free + self.n_priced, self.n_cols)

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Split a full column vector into ``(f, p, c)``."""
        return x[self.free_cols], x[self.priced_cols], x[self.colour_cols]

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x)


def assemble_lp(graph: TokenisationGraph, budget: int) -> LpProblem:
    if budget < 0:
        raise ValueError("budget must be non-negative")
    nf = len(graph.free_edges)
    npr = len(graph.priced_edges)
    nc = len(graph.colours)
    n = nf + npr + nc
    m_eq = graph.n_vertices
    m_ub = npr + 1
    if max(n, m_eq, m_ub, 2 * (nf + npr) + 2 * npr + nc) > _INDEX_LIMIT:
        raise OverflowError("LP dimensions exceed 32-bit sparse index limits")

    edges = np.concatenate([graph.free_edges, graph.priced_edges]).reshape(-1, 3)
    off = graph.vertex_offset
    tails = off[edges[:, 0]] + edges[:, 1]
    heads = off[edges[:, 0]] + edges[:, 2]
    cols = np.arange(nf + npr)
    rows = np.concatenate([tails, heads])
    vals = np.concatenate([-np.ones(nf + npr), np.ones(nf + npr)])
    A_eq = sp.csr_matrix(
        (vals, (rows, np.concatenate([cols, cols]))), shape=(m_eq, n)
    )
    b_eq = np.zeros(m_eq)
    starts = off[:-1]
    ends = off[1:] - 1
    b_eq[starts] = -1.0
    b_eq[ends] += 1.0

    k = np.arange(npr)
    ub_rows = np.concatenate([k, k, np.full(nc, npr)])
    ub_cols = np.concatenate([nf + k, nf + npr + graph.edge_colour, nf + npr + np.arange(nc)])
    ub_vals = np.concatenate([np.ones(npr), -np.ones(npr), np.ones(nc)])
    A_ub = sp.csr_matrix((ub_vals, (ub_rows, ub_cols)), shape=(m_ub, n))
    b_ub = np.zeros(m_ub)
    b_ub[npr] = float(budget)

    w = graph.weights.astype(float)
    c = np.concatenate([w[edges[:, 0]], np.zeros(nc)])
    return LpProblem(
        budget=int(budget),
        c=c,
        A_eq=A_eq,
        b_eq=b_eq,
        A_ub=A_ub,
        b_ub=b_ub,
        lb=np.zeros(n),
        ub=np.ones(n),
        n_free=nf,
        n_priced=npr,
        n_colour=nc,
        graph=graph,
    )


def _col_name(problem: LpProblem, j: int) -> str:
    if j < problem.n_free:
        return f"f{j}"
    if j < problem.n_free + problem.n_priced:
        return f"p{j - problem.n_free}"
    return f"c{j - problem.n_free - problem.n_priced}"


def _row_terms(problem: LpProblem, row) -> str:
    parts = []
    for j, v in zip(row.indices, row.data):
        sign = "+" if v >= 0 else "-"
        mag = abs(v)
        coef = "" if mag == 1 else f"{mag:.17g} "
        parts.append(f"{sign} {coef}{_col_name(problem, j)}")
    return " ".join(parts) if parts else "0 f0" if problem.n_cols else "0"


def write_lp(problem: LpProblem, fh: TextIO) -> None:
    """Write the problem in CPLEX LP text format."""
    fh.write("\\ vocabulary selection LP relaxation\nMinimize\n obj: ")
    obj = sp.csr_matrix(problem.c.reshape(1, -1))
    fh.write(_row_terms(problem, obj[0]) + "\nSubject To\n")
    for r in range(problem.n_eq):
        fh.write(f" v{r}: {_row_terms(problem, problem.A_eq[r])} = {problem.b_eq[r]:.17g}\n")
    for r in range(problem.n_ub):
        name = "budget" if r == problem.n_ub - 1 else f"u{r}"
        fh.write(f" {name}: {_row_terms(problem, problem.A_ub[r])} <= {problem.b_ub[r]:.17g}\n")
    fh.write("Bounds\n")
    for j in range(problem.n_cols):
        fh.write(f" {problem.lb[j]:.17g} <= {_col_name(problem, j)} <= {problem.ub[j]:.17g}\n")
    fh.write("End\n")
