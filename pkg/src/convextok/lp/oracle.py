"""Exact IP optimum by exhaustive search over colour subsets (tiny graphs only)."""

from __future__ import annotations

from itertools import combinations
from math import comb

from ..errors import TooLargeError
from ..segment import shortest_path
from ..tokgraph import TokenisationGraph

DEFAULT_LIMIT = 22


def _pretoken_edges(graph: TokenisationGraph):
    """Per pretoken: length, free adjacency and priced edges ``(i, j, colour)``."""
    T = graph.n_pretokens
    lengths = [len(tok) for tok, _ in graph.table.entries]
    free = [[[] for _ in range(n)] for n in lengths]
    priced = [[] for _ in range(T)]
    for t, i, j in graph.free_edges.tolist():
        free[t][i].append(j)
    for (t, i, j), k in zip(graph.priced_edges.tolist(), graph.edge_colour.tolist()):
        priced[t].append((i, j, k))
    return lengths, free, priced


def path_objective(graph: TokenisationGraph, chosen: set[int] | frozenset[int]) -> int:
    """Weighted shortest-path length with free edges plus edges of ``chosen`` colours."""
    lengths, free, priced = _pretoken_edges(graph)
    return _objective(lengths, free, priced, graph.weights.tolist(), chosen)


def _objective(lengths, free, priced, weights, chosen) -> int:
    total = 0
    for t, n in enumerate(lengths):
        adj = [list(js) for js in free[t]]
        for i, j, k in priced[t]:
            if k in chosen:
                adj[i].append(j)
        cuts = shortest_path(n, adj.__getitem__)
        total += weights[t] * (len(cuts) - 1)
    return total


def brute_force_ip(
    graph: TokenisationGraph, budget: int, limit: int = DEFAULT_LIMIT
) -> tuple[int, tuple[bytes, ...]]:
    """Exact optimum of the integer program and an optimal vocabulary.

    Every colour subset with at most ``budget`` members is scored. Among
    optimal subsets the winner has the fewest tokens, then the smallest total
    byte length, then the lexicographically smallest sorted token tuple.
    Raises :class:`TooLargeError` if more than ``2**limit`` subsets would be
    scored.
    """
    n = len(graph.colours)
    top = min(budget, n)
    work = sum(comb(n, r) for r in range(top + 1))
    if work > 2**limit:
        raise TooLargeError(
            f"{work} subsets of {n} colours with budget {budget} exceed 2**{limit}"
        )
    lengths, free, priced = _pretoken_edges(graph)
    weights = graph.weights.tolist()
    order = sorted(range(n), key=lambda k: graph.colours[k])
    best_key = None
    best_set: tuple[int, ...] = ()
    for r in range(top + 1):
        for subset in combinations(order, r):
            value = _objective(lengths, free, priced, weights, frozenset(subset))
            toks = tuple(sorted(graph.colours[k] for k in subset))
            key = (value, r, sum(map(len, toks)), toks)
            if best_key is None or key < best_key:
                best_key, best_set = key, subset
    return best_key[0], tuple(sorted(graph.colours[k] for k in best_set))
