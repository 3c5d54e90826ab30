"""Corpus ingestion, regex pretokenisation and the deduplicated pretoken table."""

from __future__ import annotations

import json
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Iterator

import regex

from .errors import FormatError, InvalidUtf8Error, PatternCompileError

logger = logging.getLogger(__name__)

# nanochat's split pattern: GPT-4's with digit runs capped at 2 instead of 3.
NANOCHAT_PATTERN = (
    r"""'(?i:[sdmt]|ll|ve|re)|[^\r\n\p{L}\p{N}]?+\p{L}+|\p{N}{1,2}"""
    r"""| ?[^\s\p{L}\p{N}]++[\r\n]*|\s*[\r\n]|\s+(?!\S)|\s+"""
)
GPT4_PATTERN = (
    r"""'(?i:[sdmt]|ll|ve|re)|[^\r\n\p{L}\p{N}]?+\p{L}+|\p{N}{1,3}"""
    r"""| ?[^\s\p{L}\p{N}]++[\r\n]*|\s*[\r\n]|\s+(?!\S)|\s+"""
)
GPT2_PATTERN = r"""'(?:[sdmt]|ll|ve|re)| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+"""

PRESETS = {
    "nanochat": NANOCHAT_PATTERN,
    "gpt4": GPT4_PATTERN,
    "gpt2": GPT2_PATTERN,
    # one pretoken per document; handy for toy corpora
    "whole": r"(?s).+",
}
DEFAULT_PRESET = "nanochat"


def resolve_pattern(spec: str) -> tuple[str, str]:
    """Map a preset name or a path to a regex file onto ``(preset_name, pattern)``."""
    if spec in PRESETS:
        return spec, PRESETS[spec]
    path = Path(spec)
    if path.is_file():
        return f"file:{path.name}", path.read_text(encoding="utf-8").rstrip("\r\n")
    raise PatternCompileError(f"unknown pretokenizer preset or file: {spec!r}")


@lru_cache(maxsize=32)
def _compile(pattern: str) -> regex.Pattern:
    try:
        return regex.compile(pattern)
    except regex.error as exc:
        raise PatternCompileError(f"cannot compile pattern: {exc}") from exc


@dataclass(frozen=True)
class Document:
    id: str
    bytes: bytes


def load_corpus(path: str | Path, format: str = "plain", strict: bool = True) -> Iterator[Document]:
    """Yield documents from a plain-lines or JSONL file, in file order.

    ``format`` is ``"plain"`` (one document per line) or ``"jsonl"`` (one
    record per line with a ``"text"`` field). Malformed JSONL lines raise
    :class:`FormatError` when ``strict``, otherwise they are logged and skipped.
    """
    path = Path(path)
    if format in ("plain", "plain-lines"):
        with open(path, "rb") as fh:
            for lineno, raw in enumerate(fh, 1):
                yield Document(f"{path.name}:{lineno}", raw.rstrip(b"\n").rstrip(b"\r"))
    elif format in ("jsonl", "jsonl-text-field"):
        with open(path, "rb") as fh:
            for lineno, raw in enumerate(fh, 1):
                if not raw.strip():
                    continue
                try:
                    record = json.loads(raw)
                    text = record["text"]
                    if not isinstance(text, str):
                        raise TypeError("'text' is not a string")
                except (ValueError, KeyError, TypeError) as exc:
                    if strict:
                        raise FormatError(f"malformed record: {exc}", line=lineno) from exc
                    logger.warning("skipping %s line %d: %s", path, lineno, exc)
                    continue
                doc_id = str(record.get("id", f"{path.name}:{lineno}"))
                yield Document(doc_id, text.encode("utf-8"))
    else:
        raise FormatError(f"unknown corpus format {format!r}")


def pretokenise(text: bytes, pattern: str) -> list[bytes]:
    """Split UTF-8 ``text`` into pretokens whose concatenation is ``text``.

    Spans the pattern does not match are emitted as their own pretokens.
    """
    compiled = _compile(pattern)
    try:
        decoded = text.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidUtf8Error(str(exc)) from exc
    pieces: list[str] = []
    pos = 0
    for m in compiled.finditer(decoded):
        start, end = m.span()
        if start == end:
            continue
        if start > pos:
            pieces.append(decoded[pos:start])
        pieces.append(decoded[start:end])
        pos = end
    if pos < len(decoded):
        pieces.append(decoded[pos:])
    return [p.encode("utf-8") for p in pieces]


@dataclass(frozen=True)
class PretokenTable:
    """Distinct pretokens with occurrence counts, in first-occurrence order."""

    entries: tuple[tuple[bytes, int], ...]
    alphabet: frozenset[int] = field(default=frozenset())
    total_bytes: int = 0

    @classmethod
    def from_counts(cls, entries: Iterable[tuple[bytes, int]]) -> "PretokenTable":
        merged: dict[bytes, int] = {}
        for tok, count in entries:
            if count < 1:
                raise ValueError(f"count must be >= 1, got {count} for {tok!r}")
            merged[bytes(tok)] = merged.get(bytes(tok), 0) + int(count)
        alphabet = frozenset(b for tok in merged for b in tok)
        total = sum(len(tok) * c for tok, c in merged.items())
        return cls(tuple(merged.items()), alphabet, total)

    @classmethod
    def from_strings(cls, strings: Iterable[str | bytes]) -> "PretokenTable":
        """Each string is one pretoken occurrence (no regex splitting)."""
        return cls.from_counts(
            (s.encode("utf-8") if isinstance(s, str) else s, 1) for s in strings
        )

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def pretokens(self) -> list[bytes]:
        return [tok for tok, _ in self.entries]

    @property
    def counts(self) -> list[int]:
        return [c for _, c in self.entries]


def _pretokenise_many(args: tuple[list[bytes], str]) -> list[list[bytes]]:
    texts, pattern = args
    return [pretokenise(t, pattern) for t in texts]


def build_pretoken_table(
    docs: Iterable[Document], pattern: str, threads: int = 1, chunk_size: int = 2048
) -> PretokenTable:
    """Pretokenise every document and count distinct pretokens.

    With ``threads > 1`` documents are pretokenised in worker processes; the
    merge still walks results in input order so entry order is unchanged.
    """
    _compile(pattern)
    counts: Counter[bytes] = Counter()

    def consume(pieces: list[bytes]) -> None:
        for piece in pieces:
            counts[piece] += 1

    if threads <= 1:
        for doc in docs:
            consume(pretokenise(doc.bytes, pattern))
        return PretokenTable.from_counts(counts.items())

    batch: list[bytes] = []
    batches: list[list[bytes]] = []
    for doc in docs:
        batch.append(doc.bytes)
        if len(batch) >= chunk_size:
            batches.append(batch)
            batch = []
    if batch:
        batches.append(batch)
    if len(batches) <= 1:
        for texts in batches:
            for pieces in _pretokenise_many((texts, pattern)):
                consume(pieces)
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for result in pool.map(_pretokenise_many, [(b, pattern) for b in batches]):
                for pieces in result:
                    consume(pieces)
    # Counter preserves insertion order, i.e. first occurrence
    return PretokenTable.from_counts(counts.items())
