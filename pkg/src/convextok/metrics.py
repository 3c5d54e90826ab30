"""Compression objective, LP certificates and intrinsic vocabulary metrics."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .corpus import Document, PretokenTable
from .errors import ConfigMismatchError, InvalidDistributionError
from .tokeniser import Tokeniser

DEFAULT_ALPHAS = (1.0, 2.5)


def corpus_objective(tok: Tokeniser, table: PretokenTable) -> int:
    """Weighted number of tokens needed to encode every pretoken of ``table``."""
    return sum(count * len(tok.segment(piece)) for piece, count in table.entries)


@dataclass(frozen=True)
class Certificate:
    lp_value: float
    tokenised_value: int
    gap_ratio: float  # percent
    gap_tol: float = 0.0
    within_tolerance: bool = True

    @property
    def below_bound(self) -> bool:
        return self.gap_ratio < 100.0

    def to_dict(self) -> dict:
        return asdict(self)


def certify_values(
    tokenised: int | float, lp_value: float, gap_tol: float = 0.0, gap_mode: str = "rel"
) -> Certificate:
    """Integrality gap ratio of a tokenised value over an LP lower bound.

    A ratio below 100% is only acceptable when the shortfall fits inside the
    solver's gap tolerance (relative or absolute, per ``gap_mode``).
    """
    if lp_value <= 0:
        raise ValueError("lp_value must be positive")
    ratio = 100.0 * tokenised / lp_value
    shortfall = lp_value - tokenised
    if shortfall <= 0:
        ok = True
    elif gap_mode == "abs":
        ok = shortfall <= gap_tol
    else:
        ok = shortfall / (1.0 + abs(lp_value)) <= gap_tol
    return Certificate(float(lp_value), tokenised, ratio, gap_tol, ok)


def certify(
    tok: Tokeniser,
    table: PretokenTable,
    lp_value: float,
    graph_hash: str | None = None,
    gap_tol: float = 0.0,
    gap_mode: str = "rel",
) -> Certificate:
    """Certificate for ``tok`` on ``table`` against an LP value.

    If both ``graph_hash`` and the tokeniser's recorded hash are present they
    must agree, otherwise the LP value belongs to a different configuration.
    """
    recorded = tok.provenance.get("graph_hash")
    if graph_hash is not None and recorded is not None and graph_hash != recorded:
        raise ConfigMismatchError(
            f"graph hash {graph_hash[:12]} differs from the tokeniser's {recorded[:12]}"
        )
    return certify_values(corpus_objective(tok, table), lp_value, gap_tol, gap_mode)


def renyi_entropy(dist: Sequence[float] | np.ndarray, alpha: float) -> float:
    """Rényi entropy in bits; ``alpha == 1`` gives Shannon entropy."""
    p = np.asarray(dist, dtype=float)
    if alpha <= 0:
        raise InvalidDistributionError("alpha must be positive")
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise InvalidDistributionError("not a probability vector")
    p = p[p > 0]
    if alpha == 1.0:
        return float(max(0.0, -(p * np.log2(p)).sum()))
    if math.isinf(alpha):
        return float(-np.log2(p.max()))
    # log-sum-exp keeps small alphas and large supports stable
    logs = alpha * np.log2(p)
    top = logs.max()
    total = top + np.log2(np.exp2(logs - top).sum())
    return float(max(0.0, total / (1.0 - alpha)))


def competition_ranks(freqs: Sequence[int]) -> list[int]:
    """1-based ranks by descending frequency; equal frequencies share the lower rank."""
    order = sorted(range(len(freqs)), key=lambda k: -freqs[k])
    ranks = [0] * len(freqs)
    prev, prev_rank = None, 0
    for pos, k in enumerate(order, 1):
        if freqs[k] != prev:
            prev, prev_rank = freqs[k], pos
        ranks[k] = prev_rank
    return ranks


@dataclass
class MetricsReport:
    total_tokens: int
    total_bytes: int
    bytes_per_token: float
    vocabulary_utilisation: float
    type_token_ratio: float
    renyi_entropy: dict[float, float]
    avg_token_rank: float
    avg_token_length_bytes: float
    tokens_per_document: float
    distinct_tokens_used: int
    documents: int = 0
    vocab_size: int = 0
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["renyi_entropy"] = {f"{a:g}": v for a, v in self.renyi_entropy.items()}
        return d

    def row(self, alphas: Sequence[float] | None = None) -> list[tuple[str, str]]:
        """``(column, formatted value)`` pairs in table order."""
        alphas = alphas or list(self.renyi_entropy)
        cols = [
            ("Vocabulary Utilisation", f"{self.vocabulary_utilisation:.4f}"),
            ("Type-Token Ratio", f"{self.type_token_ratio:.6f}"),
        ]
        cols += [(f"Renyi Entropy (a={a:g})", f"{self.renyi_entropy[a]:.4f}") for a in alphas]
        cols += [
            ("Avg Token Rank", f"{self.avg_token_rank:.2f}"),
            ("Avg Token Length (bytes)", f"{self.avg_token_length_bytes:.3f}"),
            ("Bytes/Token", f"{self.bytes_per_token:.4f}"),
            ("Tokens/Doc", f"{self.tokens_per_document:.2f}"),
            ("Total Tokens", f"{self.total_tokens}"),
        ]
        return cols


def intrinsic_metrics(
    tok: Tokeniser,
    eval_docs: Iterable[Document | bytes | str],
    alphas: Sequence[float] = DEFAULT_ALPHAS,
) -> MetricsReport:
    """Unigram statistics of ``tok`` over an evaluation corpus (specials excluded).

    ``avg_token_length_bytes`` averages over distinct tokens used, while
    ``bytes_per_token`` averages over occurrences.
    """
    counts: Counter[int] = Counter()
    n_docs = 0
    total_bytes = 0
    for doc in eval_docs:
        raw = doc.bytes if isinstance(doc, Document) else doc
        if isinstance(raw, str):
            raw = raw.encode("utf-8")
        n_docs += 1
        total_bytes += len(raw)
        counts.update(k for k in tok.encode(raw) if not tok.is_special(k))
    if n_docs == 0:
        raise ValueError("evaluation corpus is empty")
    total = sum(counts.values())
    used = len(counts)
    if total == 0:
        zero = {float(a): 0.0 for a in alphas}
        return MetricsReport(0, total_bytes, 0.0, 0.0, 0.0, zero, 0.0, 0.0, 0.0, 0,
                             n_docs, tok.n_regular, ["no tokens produced"])
    ids = sorted(counts)
    freqs = [counts[k] for k in ids]
    dist = np.asarray(freqs, dtype=float) / total
    ranks = competition_ranks(freqs)
    avg_rank = sum(r * f for r, f in zip(ranks, freqs)) / total
    avg_len = sum(len(tok.token_bytes(k)) for k in ids) / used
    return MetricsReport(
        total_tokens=total,
        total_bytes=total_bytes,
        bytes_per_token=total_bytes / total,
        vocabulary_utilisation=used / tok.n_regular,
        type_token_ratio=used / total,
        renyi_entropy={float(a): renyi_entropy(dist, a) for a in alphas},
        avg_token_rank=avg_rank,
        avg_token_length_bytes=avg_len,
        tokens_per_document=total / n_docs,
        distinct_tokens_used=used,
        documents=n_docs,
        vocab_size=tok.n_regular,
    )


def jaccard(a: Iterable[bytes], b: Iterable[bytes]) -> float:
    a, b = set(a), set(b)
    union = a | b
    return 1.0 if not union else len(a & b) / len(union)


def jaccard_stability(vocabs: Sequence[Iterable[bytes]]) -> tuple[np.ndarray, float]:
    """Pairwise Jaccard matrix over learned-token sets and its mean over distinct pairs."""
    sets = [set(v) for v in vocabs]
    if len(sets) < 2:
        raise ValueError("need at least two vocabularies")
    n = len(sets)
    mat = np.eye(n)
    for i, j in combinations(range(n), 2):
        mat[i, j] = mat[j, i] = jaccard(sets[i], sets[j])
    mean = float(np.mean([mat[i, j] for i, j in combinations(range(n), 2)]))
    return mat, mean
