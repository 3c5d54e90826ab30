"""Minimum-token segmentation of a single pretoken.

Every component that needs an optimal segmentation (the encoder, LP
re-segmentation and the exact IP oracle) goes through :func:`shortest_path`,
so they agree on both the length and the canonical path.
"""

from __future__ import annotations

from typing import Callable, Iterable


def shortest_path(n: int, ends_from: Callable[[int], Iterable[int]]) -> list[int]:
    """Return the cut positions ``[0, ..., n]`` of a shortest 0 -> n path.

    ``ends_from(i)`` yields every ``j > i`` reachable by one edge from ``i``.
    Among shortest paths the one with the longest first edge wins, applied
    recursively left to right. The caller must guarantee a path exists (the
    single-byte edges always provide one).
    """
    INF = n + 1
    best = [INF] * (n + 1)
    choice = [0] * (n + 1)
    best[n] = 0
    for i in range(n - 1, -1, -1):
        b, c = INF, 0
        for j in ends_from(i):
            cand = best[j] + 1
            if cand < b or (cand == b and j > c):
                b, c = cand, j
        best[i] = b
        choice[i] = c
    if best[0] >= INF:
        raise ValueError("no path from 0 to n")
    cuts = [0]
    while cuts[-1] < n:
        cuts.append(choice[cuts[-1]])
    return cuts


def segment_bytes(s: bytes, vocab: set[bytes] | frozenset[bytes], max_len: int) -> list[bytes]:
    """Shortest segmentation of ``s`` using single bytes plus ``vocab`` entries."""
    n = len(s)

    def ends(i: int):
        yield i + 1
        for j in range(i + 2, min(n, i + max_len) + 1):
            if s[i:j] in vocab:
                yield j

    cuts = shortest_path(n, ends)
    return [s[a:b] for a, b in zip(cuts, cuts[1:])]
