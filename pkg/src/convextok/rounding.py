"""Rounding a fractional colour vector to a vocabulary, then re-segmenting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .segment import shortest_path
from .tokgraph import TokenisationGraph

INT_THRESHOLD = 0.999
KINDS = ("det", "bias", "int")


def _top_k(keys: np.ndarray, budget: int, tokens: Sequence[bytes] | None) -> np.ndarray:
    n = len(keys)
    out = np.zeros(n, dtype=np.int8)
    if budget <= 0 or n == 0:
        return out
    toks = tokens if tokens is not None else [b""] * n
    order = sorted(range(n), key=lambda k: (-keys[k], toks[k], k))
    out[order[:budget]] = 1
    return out


def round_det(c: np.ndarray, budget: int, tokens: Sequence[bytes] | None = None) -> np.ndarray:
    """Select the ``budget`` largest entries; ties go to the smaller token bytes."""
    return _top_k(np.asarray(c, dtype=float), budget, tokens)


def round_bias(
    c: np.ndarray,
    lengths: Sequence[int] | np.ndarray,
    budget: int,
    tokens: Sequence[bytes] | None = None,
) -> np.ndarray:
    """Like :func:`round_det` but ranked by value per token byte."""
    c = np.asarray(c, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    if np.any(lengths <= 0):
        raise ValueError("token lengths must be positive")
    return _top_k(c / lengths, budget, tokens)


def round_int(c: np.ndarray, threshold: float = INT_THRESHOLD) -> np.ndarray:
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must be in (0, 1]")
    return (np.asarray(c, dtype=float) >= threshold).astype(np.int8)


@dataclass(frozen=True)
class RoundingScheme:
    kind: str = "det"
    int_threshold: float = INT_THRESHOLD

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"rounding kind must be one of {KINDS}")
        if not 0.0 < self.int_threshold <= 1.0:
            raise ValueError("int_threshold must be in (0, 1]")

    def apply(self, c: np.ndarray, tokens: Sequence[bytes], budget: int) -> np.ndarray:
        if self.kind == "det":
            return round_det(c, budget, tokens)
        if self.kind == "bias":
            return round_bias(c, [len(t) for t in tokens], budget, tokens)
        return round_int(c, self.int_threshold)


def resegment(
    graph: TokenisationGraph, chosen: np.ndarray | Sequence[int]
) -> tuple[int, list[list[bytes]]]:
    """Optimal discrete segmentation of every pretoken given the chosen colours.

    Returns the weighted token count and, per pretoken, its token sequence.
    """
    chosen = np.asarray(chosen)
    if len(chosen) != len(graph.colours):
        raise ValueError("chosen vector length differs from the number of colours")
    adj: list[list[list[int]]] = [
        [[] for _ in range(len(tok))] for tok, _ in graph.table.entries
    ]
    for t, i, j in graph.free_edges.tolist():
        adj[t][i].append(j)
    usable = chosen[graph.edge_colour] != 0 if len(graph.edge_colour) else np.zeros(0, bool)
    for t, i, j in graph.priced_edges[usable].tolist():
        adj[t][i].append(j)
    total = 0
    paths = []
    for t, (tok, count) in enumerate(graph.table.entries):
        cuts = shortest_path(len(tok), adj[t].__getitem__)
        paths.append([tok[a:b] for a, b in zip(cuts, cuts[1:])])
        total += count * (len(cuts) - 1)
    return total, paths
