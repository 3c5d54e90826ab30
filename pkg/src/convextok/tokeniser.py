"""Byte-level tokeniser: vocabulary, encoding, decoding and the JSON file format.

Token ids are laid out as ``[256 single bytes | learned tokens | specials]``.
Specials are never produced by :meth:`Tokeniser.encode`; callers insert them
explicitly via :meth:`Tokeniser.special_id`.
"""

from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import DEFAULT_PRESET, PRESETS, pretokenise
from .errors import (
    ChecksumError,
    DuplicateSpecialTokenError,
    InvalidIdError,
    SchemaVersionError,
    UnknownTokenError,
)
from .segment import segment_bytes
from .tokgraph import TokenisationGraph

FORMAT_VERSION = 1
ALPHABET_SIZE = 256
DEFAULT_SPECIALS = ("<|bos|>",)

TokenString = list[int]


@dataclass(frozen=True)
class SpecialToken:
    name: str
    bytes: bytes

    @classmethod
    def named(cls, name: str) -> "SpecialToken":
        return cls(name, name.encode("utf-8"))


def _as_specials(specials: Iterable[SpecialToken | str]) -> tuple[SpecialToken, ...]:
    out = tuple(s if isinstance(s, SpecialToken) else SpecialToken.named(s) for s in specials)
    names = [s.name for s in out]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise DuplicateSpecialTokenError(f"duplicate special tokens: {dupes}")
    return out


class Tokeniser:
    """Immutable vocabulary plus the encoder matching its training method.

    ``method="bpe"`` encodes by replaying ``merges`` in training order; any
    other method uses the minimum-token-count segmentation.
    """

    def __init__(
        self,
        learned: Sequence[bytes],
        specials: Iterable[SpecialToken | str] = (),
        *,
        method: str = "convextok",
        rounding: str | None = None,
        budget: int | None = None,
        pretokenizer_preset: str = DEFAULT_PRESET,
        pattern: str | None = None,
        merges: Sequence[tuple[bytes, bytes]] = (),
        provenance: dict | None = None,
    ):
        learned = tuple(bytes(t) for t in learned)
        for tok in learned:
            if len(tok) < 2:
                raise ValueError(f"learned token {tok!r} is shorter than 2 bytes")
        if len(set(learned)) != len(learned):
            raise ValueError("learned tokens must be pairwise distinct")
        self.learned = learned
        self.specials = _as_specials(specials)
        self.method = method
        self.rounding = rounding
        self.budget = len(learned) if budget is None else int(budget)
        self.pretokenizer_preset = pretokenizer_preset
        if pattern is None:
            pattern = PRESETS[pretokenizer_preset]
        self.pattern = pattern
        self.merges = tuple((bytes(a), bytes(b)) for a, b in merges)
        self.provenance = dict(provenance or {})

        self._id_to_bytes = [bytes([b]) for b in range(ALPHABET_SIZE)] + list(learned)
        self._id_to_bytes += [s.bytes for s in self.specials]
        self._token_to_id = {tok: k for k, tok in enumerate(self._id_to_bytes[: self.n_regular])}
        self._learned_set = frozenset(learned)
        self._max_len = max((len(t) for t in learned), default=1)
        self._ranks = {pair: r for r, pair in enumerate(self.merges)}
        self._encode_piece = lru_cache(maxsize=1 << 16)(self._segment_uncached)

    @property
    def n_regular(self) -> int:
        """Alphabet plus learned tokens (everything except specials)."""
        return ALPHABET_SIZE + len(self.learned)

    @property
    def vocab_size(self) -> int:
        return self.n_regular + len(self.specials)

    def token_bytes(self, token_id: int) -> bytes:
        if not 0 <= token_id < self.vocab_size:
            raise InvalidIdError(f"token id {token_id} outside [0, {self.vocab_size})")
        return self._id_to_bytes[token_id]

    def token_id(self, token: bytes) -> int:
        return self._token_to_id[token]

    def special_id(self, name: str) -> int:
        for k, s in enumerate(self.specials):
            if s.name == name:
                return self.n_regular + k
        raise KeyError(f"no special token named {name!r}")

    def is_special(self, token_id: int) -> bool:
        return token_id >= self.n_regular

    # -- encoding -----------------------------------------------------------

    def _segment_uncached(self, piece: bytes) -> tuple[bytes, ...]:
        if self.method == "bpe":
            return tuple(self._replay_merges(piece))
        return tuple(segment_bytes(piece, self._learned_set, self._max_len))

    def _replay_merges(self, piece: bytes) -> list[bytes]:
        parts = [bytes([b]) for b in piece]
        floor = 0
        ranks = self._ranks
        while len(parts) > 1:
            best = None
            for pair in zip(parts, parts[1:]):
                r = ranks.get(pair)
                if r is not None and r >= floor and (best is None or r < best):
                    best = r
            if best is None:
                break
            a, b = self.merges[best]
            merged = []
            i = 0
            while i < len(parts):
                if i + 1 < len(parts) and parts[i] == a and parts[i + 1] == b:
                    merged.append(a + b)
                    i += 2
                else:
                    merged.append(parts[i])
                    i += 1
            parts = merged
            floor = best + 1
        return parts

    def segment(self, piece: bytes) -> tuple[bytes, ...]:
        """Token byte strings for a single pretoken."""
        return self._encode_piece(bytes(piece))

    def encode(self, text: bytes | str) -> TokenString:
        if isinstance(text, str):
            text = text.encode("utf-8")
        ids: TokenString = []
        ids_of = self._token_to_id
        for piece in pretokenise(text, self.pattern):
            ids.extend(ids_of[tok] for tok in self.segment(piece))
        return ids

    def decode(self, ids: Iterable[int]) -> bytes:
        return b"".join(self.token_bytes(int(k)) for k in ids)

    # -- serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        b64 = lambda b: base64.b64encode(b).decode("ascii")  # noqa: E731
        payload = {
            "format_version": FORMAT_VERSION,
            "method": self.method,
            "rounding": self.rounding,
            "K": self.budget,
            "pretokenizer_preset": self.pretokenizer_preset,
            "pretokenizer_pattern": self.pattern,
            "specials": [{"name": s.name, "bytes_b64": b64(s.bytes)} for s in self.specials],
            "learned": [b64(t) for t in self.learned],
            "provenance": self.provenance,
        }
        if self.method == "bpe":
            payload["merges"] = [[b64(a), b64(b)] for a, b in self.merges]
        return payload

    def dumps(self) -> str:
        payload = self.to_dict()
        payload["checksum"] = _checksum(payload)
        return json.dumps(payload, sort_keys=True, indent=1) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str) -> "Tokeniser":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ChecksumError(f"tokeniser file is truncated or corrupt: {exc}") from exc
        if not isinstance(payload, dict):
            raise ChecksumError("tokeniser file does not hold a JSON object")
        version = payload.get("format_version")
        if version != FORMAT_VERSION:
            raise SchemaVersionError(f"unsupported format_version {version!r}")
        stored = payload.pop("checksum", None)
        if stored != _checksum(payload):
            raise ChecksumError("checksum mismatch")
        d = lambda s: base64.b64decode(s.encode("ascii"), validate=True)  # noqa: E731
        return cls(
            [d(t) for t in payload["learned"]],
            [SpecialToken(s["name"], d(s["bytes_b64"])) for s in payload["specials"]],
            method=payload["method"],
            rounding=payload["rounding"],
            budget=payload["K"],
            pretokenizer_preset=payload["pretokenizer_preset"],
            pattern=payload["pretokenizer_pattern"],
            merges=[(d(a), d(b)) for a, b in payload.get("merges", [])],
            provenance=payload["provenance"],
        )

    @classmethod
    def load(cls, path: str | Path) -> "Tokeniser":
        return cls.loads(Path(path).read_text(encoding="utf-8"))

    def __repr__(self) -> str:
        return (f"Tokeniser(method={self.method!r}, rounding={self.rounding!r}, "
                f"learned={len(self.learned)}, specials={len(self.specials)})")


def _checksum(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canon.encode("utf-8")).hexdigest()


def byte_level(specials: Iterable[SpecialToken | str] = (), **meta) -> Tokeniser:
    return Tokeniser((), specials, **meta)


def from_colour_choice(
    chosen: np.ndarray | Sequence[int],
    colours: Sequence[bytes],
    specials: Iterable[SpecialToken | str] = (),
    **meta,
) -> Tokeniser:
    """Vocabulary = alphabet plus every colour with ``chosen == 1``, in colour order."""
    chosen = np.asarray(chosen)
    if len(chosen) != len(colours):
        raise ValueError("chosen vector length differs from the number of colours")
    if not np.all((chosen == 0) | (chosen == 1)):
        raise ValueError("chosen vector must be binary")
    learned = [tok for tok, on in zip(colours, chosen) if on]
    meta.setdefault("budget", len(learned))
    return Tokeniser(learned, specials, **meta)


def to_ip_vectors(
    tok: Tokeniser, graph: TokenisationGraph
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Binary ``(f, p, c)`` for the graph: the tokeniser's vocabulary and its segmentation."""
    colour_ids = graph.colour_index
    c = np.zeros(len(graph.colours), dtype=np.int8)
    for t in tok.learned:
        if t not in colour_ids:
            raise UnknownTokenError(f"learned token {t!r} is not a colour of this graph")
        c[colour_ids[t]] = 1

    free_ids = {tuple(e): k for k, e in enumerate(graph.free_edges.tolist())}
    priced_ids = {tuple(e): k for k, e in enumerate(graph.priced_edges.tolist())}
    f = np.zeros(len(free_ids), dtype=np.int8)
    p = np.zeros(len(priced_ids), dtype=np.int8)
    for t, (piece, _) in enumerate(graph.table.entries):
        i = 0
        for token in tok.segment(piece):
            edge = (t, i, i + len(token))
            if edge in free_ids:
                f[free_ids[edge]] = 1
            elif edge in priced_ids:
                p[priced_ids[edge]] = 1
            else:
                raise UnknownTokenError(f"token {token!r} has no edge in pretoken {t}")
            i += len(token)
    return f, p, c
