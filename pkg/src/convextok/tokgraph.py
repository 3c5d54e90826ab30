"""Tokenisation graphs: one small DAG per distinct pretoken.

Vertex ``(t, i)`` sits between bytes ``i-1`` and ``i`` of pretoken ``t``. Free
edges are usable at no budget cost (single bytes by default); priced edges
carry a colour, the candidate token equal to the spanned bytes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, TextIO

import numpy as np

from .corpus import PretokenTable

DEFAULT_MAX_TOKEN_LEN = 16


@dataclass(frozen=True)
class EdgePolicy:
    """Which multi-byte edges enter the graph and which of them are free.

    ``max_token_len=None`` means unbounded. Colours whose weighted occurrence
    count is below ``min_colour_count`` are dropped with all their edges.
    ``free_token`` promotes multi-byte edges to free edges; ``admit`` filters
    priced edges. Neither hook is serialised, so the name should say what
    they do.
    """

    max_token_len: int | None = DEFAULT_MAX_TOKEN_LEN
    min_colour_count: int = 0
    name: str = "bytes-free"
    free_token: Callable[[bytes], bool] | None = field(default=None, compare=False)
    admit: Callable[[bytes], bool] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.max_token_len is not None and self.max_token_len < 1:
            raise ValueError("max_token_len must be positive or None")
        if self.min_colour_count < 0:
            raise ValueError("min_colour_count must be non-negative")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max_token_len": self.max_token_len,
            "min_colour_count": self.min_colour_count,
        }

    @classmethod
    def unbounded(cls) -> "EdgePolicy":
        return cls(max_token_len=None)


@dataclass(frozen=True, eq=False)
class TokenisationGraph:
    table: PretokenTable
    policy: EdgePolicy
    vertex_offset: np.ndarray  # (T+1,), vertex id of (t, i) is offset[t] + i
    free_edges: np.ndarray  # (nf, 3) rows (t, i, j)
    priced_edges: np.ndarray  # (np, 3) rows (t, i, j), j >= i + 2
    colours: tuple[bytes, ...]
    edge_colour: np.ndarray  # (np,) colour index per priced edge
    weights: np.ndarray  # (T,) pretoken counts

    @property
    def n_vertices(self) -> int:
        return int(self.vertex_offset[-1])

    @property
    def n_pretokens(self) -> int:
        return len(self.table)

    @property
    def colour_index(self) -> dict[bytes, int]:
        return {tok: k for k, tok in enumerate(self.colours)}

    def edge_token(self, t: int, i: int, j: int) -> bytes:
        return self.table.entries[t][0][i:j]

    def colour_edge_counts(self) -> np.ndarray:
        return np.bincount(self.edge_colour, minlength=len(self.colours))

    def graph_hash(self) -> str:
        h = hashlib.sha256()
        for tok, count in self.table.entries:
            h.update(len(tok).to_bytes(8, "little"))
            h.update(tok)
            h.update(count.to_bytes(8, "little"))
        h.update(repr(sorted(self.policy.to_dict().items())).encode())
        for tok in self.colours:
            h.update(len(tok).to_bytes(8, "little"))
            h.update(tok)
        h.update(self.free_edges.astype(np.int64).tobytes())
        h.update(self.priced_edges.astype(np.int64).tobytes())
        return h.hexdigest()


def build_graph(table: PretokenTable, policy: EdgePolicy | None = None) -> TokenisationGraph:
    """Enumerate free and priced edges per pretoken and colour the priced ones.

    Colours are numbered by first appearance scanning pretokens in table
    order, start positions left to right, lengths ascending.
    """
    policy = policy or EdgePolicy()
    if len(table) == 0:
        raise ValueError("cannot build a graph from an empty pretoken table")
    max_len = policy.max_token_len

    free: list[tuple[int, int, int]] = []
    priced: list[tuple[int, int, int, bytes]] = []
    weighted: dict[bytes, int] = {}
    for t, (tok, count) in enumerate(table.entries):
        n = len(tok)
        for i in range(n):
            free.append((t, i, i + 1))
            stop = n if max_len is None else min(n, i + max_len)
            for j in range(i + 2, stop + 1):
                sub = tok[i:j]
                if policy.free_token is not None and policy.free_token(sub):
                    free.append((t, i, j))
                    continue
                if policy.admit is not None and not policy.admit(sub):
                    continue
                priced.append((t, i, j, sub))
                weighted[sub] = weighted.get(sub, 0) + count

    colour_ids: dict[bytes, int] = {}
    kept: list[tuple[int, int, int]] = []
    edge_colour: list[int] = []
    for t, i, j, sub in priced:
        if weighted[sub] < policy.min_colour_count:
            continue
        cid = colour_ids.setdefault(sub, len(colour_ids))
        kept.append((t, i, j))
        edge_colour.append(cid)

    free.sort()
    offsets = np.zeros(len(table) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(tok) + 1 for tok, _ in table.entries])
    return TokenisationGraph(
        table=table,
        policy=policy,
        vertex_offset=offsets,
        free_edges=np.asarray(free, dtype=np.int64).reshape(-1, 3),
        priced_edges=np.asarray(kept, dtype=np.int64).reshape(-1, 3),
        colours=tuple(colour_ids),
        edge_colour=np.asarray(edge_colour, dtype=np.int64),
        weights=np.asarray(table.counts, dtype=np.int64),
    )


def candidate_tokens(graph: TokenisationGraph) -> list[tuple[bytes, int]]:
    """Each colour with the weighted number of edges carrying it."""
    if len(graph.colours) == 0:
        return []
    w = graph.weights[graph.priced_edges[:, 0]]
    totals = np.bincount(graph.edge_colour, weights=w, minlength=len(graph.colours))
    return [(tok, int(round(v))) for tok, v in zip(graph.colours, totals)]


def dump_graph(graph: TokenisationGraph, fh: TextIO) -> None:
    """Plain-text diagnostic dump, one line per pretoken."""
    fh.write(f"# pretokens={graph.n_pretokens} vertices={graph.n_vertices} "
             f"free={len(graph.free_edges)} priced={len(graph.priced_edges)} "
             f"colours={len(graph.colours)} hash={graph.graph_hash()}\n")
    by_t_free: dict[int, list[str]] = {}
    for t, i, j in graph.free_edges.tolist():
        by_t_free.setdefault(t, []).append(f"{i}-{j}")
    by_t_priced: dict[int, list[str]] = {}
    for (t, i, j), cid in zip(graph.priced_edges.tolist(), graph.edge_colour.tolist()):
        by_t_priced.setdefault(t, []).append(f"{i}-{j}:{cid}")
    for t, (tok, count) in enumerate(graph.table.entries):
        fh.write(
            f"{t}\t{tok.hex()}\t{count}\tfree={','.join(by_t_free.get(t, []))}"
            f"\tpriced={','.join(by_t_priced.get(t, []))}\n"
        )
