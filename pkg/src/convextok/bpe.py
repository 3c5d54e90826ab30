"""Greedy byte-pair-encoding trainer over a weighted pretoken table."""

from __future__ import annotations

import heapq
from collections import defaultdict
from typing import Iterable

from .corpus import DEFAULT_PRESET, PretokenTable
from .tokeniser import SpecialToken, Tokeniser


def _merge(word: list[bytes], a: bytes, b: bytes) -> list[bytes]:
    out = []
    i = 0
    while i < len(word):
        if i + 1 < len(word) and word[i] == a and word[i + 1] == b:
            out.append(a + b)
            i += 2
        else:
            out.append(word[i])
            i += 1
    return out


def train_bpe(
    table: PretokenTable,
    budget: int,
    specials: Iterable[SpecialToken | str] = (),
    pretokenizer_preset: str = DEFAULT_PRESET,
    pattern: str | None = None,
) -> Tokeniser:
    """Learn up to ``budget`` new tokens by repeatedly merging the most frequent pair.

    Pair frequency is weighted by pretoken counts. Ties go to the pair whose
    merged bytes sort first, then to the smaller left token. Training stops
    early once every pretoken is a single token. A merge whose result already
    exists is recorded (encoding replays it) but takes no budget slot.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    words = [[bytes([b]) for b in tok] for tok, _ in table.entries]
    weights = table.counts
    counts: dict[tuple[bytes, bytes], int] = defaultdict(int)
    where: dict[tuple[bytes, bytes], set[int]] = defaultdict(set)
    for t, word in enumerate(words):
        for pair in zip(word, word[1:]):
            counts[pair] += weights[t]
            where[pair].add(t)
    heap = [(-n, a + b, a, b) for (a, b), n in counts.items()]
    heapq.heapify(heap)

    learned: list[bytes] = []
    known: set[bytes] = set()
    merges: list[tuple[bytes, bytes]] = []
    while len(learned) < budget and heap:
        neg, _, a, b = heapq.heappop(heap)
        if counts.get((a, b), 0) != -neg or neg == 0:
            continue
        merges.append((a, b))
        new = a + b
        if new not in known:
            known.add(new)
            learned.append(new)
        touched: dict[tuple[bytes, bytes], int] = {}
        for t in sorted(where.pop((a, b))):
            old = words[t]
            w = weights[t]
            for pair in zip(old, old[1:]):
                counts[pair] -= w
                touched[pair] = counts[pair]
            words[t] = word = _merge(old, a, b)
            for pair in zip(word, word[1:]):
                counts[pair] += w
                touched[pair] = counts[pair]
                where[pair].add(t)
        for pair, n in touched.items():
            if n <= 0:
                counts.pop(pair, None)
                where.pop(pair, None)
            elif pair != (a, b):
                heapq.heappush(heap, (-n, pair[0] + pair[1], pair[0], pair[1]))
        counts.pop((a, b), None)

    objective = sum(w * len(word) for word, w in zip(words, weights))
    return Tokeniser(
        learned,
        specials,
        method="bpe",
        budget=budget,
        pretokenizer_preset=pretokenizer_preset,
        pattern=pattern,
        merges=merges,
        provenance={"train_objective": objective, "merges": len(merges)},
    )
