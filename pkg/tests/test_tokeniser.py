import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from convextok.bpe import train_bpe
from convextok.corpus import PretokenTable
from convextok.errors import (
    ChecksumError,
    DuplicateSpecialTokenError,
    InvalidIdError,
    SchemaVersionError,
    UnknownTokenError,
)
from convextok.metrics import corpus_objective
from convextok.segment import segment_bytes, shortest_path
from convextok.tokeniser import (
    SpecialToken,
    Tokeniser,
    byte_level,
    from_colour_choice,
    to_ip_vectors,
)
from convextok.tokgraph import EdgePolicy, build_graph


def test_id_layout():
    tok = Tokeniser([b"ab", b"abc"], ["<|bos|>", "<|eos|>"])
    assert tok.n_regular == 258
    assert tok.vocab_size == 260
    assert tok.token_id(b"a") == 97
    assert tok.token_id(b"abc") == 257
    assert tok.special_id("<|eos|>") == 259
    assert tok.is_special(258) and not tok.is_special(257)
    assert tok.token_bytes(258) == b"<|bos|>"
    with pytest.raises(InvalidIdError):
        tok.token_bytes(260)
    with pytest.raises(InvalidIdError):
        tok.decode([-1])


def test_specials_never_emitted_by_encode():
    tok = Tokeniser([], ["<|bos|>"], pretokenizer_preset="whole")
    ids = tok.encode("<|bos|>")
    assert len(ids) == 7
    assert not any(tok.is_special(k) for k in ids)


def test_rejects_bad_vocab():
    with pytest.raises(ValueError):
        Tokeniser([b"a"])
    with pytest.raises(ValueError):
        Tokeniser([b"ab", b"ab"])
    with pytest.raises(DuplicateSpecialTokenError):
        Tokeniser([], ["<x>", "<x>"])


def test_segment_prefers_fewest_tokens():
    tok = Tokeniser([b"ab"], pretokenizer_preset="whole")
    assert tok.segment(b"abaa") == (b"ab", b"a", b"a")
    assert tok.segment(b"abe") == (b"ab", b"e")
    tok = Tokeniser([b"bc", b"bd", b"be"], pretokenizer_preset="whole")
    assert tok.segment(b"abe") == (b"a", b"be")


def test_shortest_path_ties_go_to_longer_first_token():
    # both [ab, c] and [a, bc] use two tokens
    vocab = {b"ab", b"bc"}
    assert segment_bytes(b"abc", vocab, 2) == [b"ab", b"c"]
    assert shortest_path(0, lambda i: []) == [0]


@settings(max_examples=300, deadline=None)
@given(
    st.lists(st.text(alphabet="abc", min_size=2, max_size=4), max_size=6, unique=True),
    st.text(alphabet="abc", max_size=12),
)
def test_encoder_is_optimal(vocab, text):
    vocab = [v.encode() for v in vocab]
    tok = Tokeniser(vocab, pretokenizer_preset="whole")
    ids = tok.encode(text)
    assert len(ids) == oracles.min_segmentation(text.encode(), set(vocab))
    assert tok.decode(ids) == text.encode()


@settings(max_examples=300, deadline=None)
@given(st.text())
def test_round_trip_any_unicode(text):
    tok = Tokeniser([b"th", b"the", b" a", "é".encode()])
    assert tok.decode(tok.encode(text)) == text.encode("utf-8")


def test_byte_level():
    tok = byte_level()
    assert tok.encode("hé") == [104, 0xC3, 0xA9]


def test_save_load_round_trip(tmp_path):
    table = PretokenTable.from_strings(["abc", "abd", "abe", "bc", "bd", "be"])
    tok = train_bpe(table, 3, ["<|bos|>"])
    path = tmp_path / "tok.json"
    tok.save(path)
    back = Tokeniser.load(path)
    assert back.learned == tok.learned
    assert back.merges == tok.merges
    assert back.specials == (SpecialToken("<|bos|>", b"<|bos|>"),)
    assert back.dumps() == tok.dumps()
    assert back.encode("abcbd") == tok.encode("abcbd")


def test_load_rejects_tampering(tmp_path):
    tok = Tokeniser([b"ab"])
    payload = json.loads(tok.dumps())
    payload["learned"] = ["Y2Q="]
    with pytest.raises(ChecksumError):
        Tokeniser.loads(json.dumps(payload))


def test_load_rejects_unknown_version():
    payload = json.loads(Tokeniser([b"ab"]).dumps())
    payload["format_version"] = 99
    with pytest.raises(SchemaVersionError):
        Tokeniser.loads(json.dumps(payload))


def test_load_rejects_truncated_file():
    text = Tokeniser([b"ab"]).dumps()
    with pytest.raises(ChecksumError):
        Tokeniser.loads(text[: len(text) // 2])


def test_from_colour_choice_and_back(overlap_table):
    graph = build_graph(overlap_table)
    chosen = np.array([t == b"aba" for t in graph.colours], dtype=np.int8)
    tok = from_colour_choice(chosen, graph.colours)
    assert tok.learned == (b"aba",)
    f, p, c = to_ip_vectors(tok, graph)
    assert np.array_equal(c, chosen)
    # abaa -> aba a ; aba -> aba
    assert p.sum() == 2 and f.sum() == 1
    with pytest.raises(ValueError):
        from_colour_choice([1, 0], graph.colours)


def test_to_ip_vectors_unknown_token(overlap_table):
    graph = build_graph(overlap_table)
    with pytest.raises(UnknownTokenError):
        to_ip_vectors(Tokeniser([b"zz"]), graph)


def test_bpe_golden(golden_table):
    tok = train_bpe(golden_table, 3)
    assert tok.learned == (b"ab", b"abc", b"abd")
    assert corpus_objective(tok, golden_table) == 10
    assert tok.method == "bpe"


def test_bpe_replays_merges_in_order():
    table = PretokenTable.from_counts([(b"aaaa", 3), (b"ab", 1)])
    tok = train_bpe(table, 2)
    assert tok.learned == (b"aa", b"aaaa")
    assert tok.segment(b"aaaaa") == (b"aaaa", b"a")
    assert tok.segment(b"aab") == (b"aa", b"b")


def test_bpe_stops_when_nothing_to_merge():
    tok = train_bpe(PretokenTable.from_strings(["ab"]), 5)
    assert tok.learned == (b"ab",)
    with pytest.raises(ValueError):
        train_bpe(PretokenTable.from_strings(["ab"]), -1)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.text(alphabet="abc", min_size=1, max_size=8), min_size=1, max_size=5),
    st.integers(0, 6),
)
def test_bpe_properties(strings, budget):
    table = PretokenTable.from_strings(strings)
    tok = train_bpe(table, budget)
    assert len(tok.learned) <= budget
    value = corpus_objective(tok, table)
    assert value <= table.total_bytes
    # BPE is never better than the optimal segmentation with the same vocabulary
    best = sum(w * oracles.min_segmentation(s, set(tok.learned)) for s, w in table.entries)
    assert best <= value
    for s in table.pretokens:
        assert tok.decode(tok.encode(s)) == s
