import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convextok.corpus import Document, PretokenTable
from convextok.errors import ConfigMismatchError, InvalidDistributionError
from convextok.metrics import (
    certify,
    certify_values,
    competition_ranks,
    corpus_objective,
    intrinsic_metrics,
    jaccard,
    jaccard_stability,
    renyi_entropy,
)
from convextok.tokeniser import Tokeniser


def test_renyi_known_value():
    # -log2(0.5**2 + 0.25**2 + 0.25**2)
    assert renyi_entropy([0.5, 0.25, 0.25], 2) == pytest.approx(1.415037499278844, abs=1e-12)
    assert renyi_entropy([0.5, 0.25, 0.25], 1) == pytest.approx(1.5, abs=1e-12)
    assert renyi_entropy([1.0], 2.5) == 0.0


def test_renyi_min_entropy_limit():
    assert renyi_entropy([0.5, 0.25, 0.25], math.inf) == pytest.approx(1.0)


@pytest.mark.parametrize("bad", [[], [0.5, 0.4], [1.2, -0.2], [[0.5, 0.5]]])
def test_renyi_rejects_non_distributions(bad):
    with pytest.raises(InvalidDistributionError):
        renyi_entropy(bad, 2)


def test_renyi_rejects_bad_alpha():
    with pytest.raises(InvalidDistributionError):
        renyi_entropy([1.0], 0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.001, 10), min_size=1, max_size=40), st.floats(0.05, 10))
def test_renyi_bounded_by_log_support(weights, alpha):
    p = np.asarray(weights) / sum(weights)
    h = renyi_entropy(p, alpha)
    assert -1e-12 <= h <= math.log2(len(p)) + 1e-9


def test_competition_ranks():
    assert competition_ranks([5, 9, 5, 1]) == [2, 1, 2, 4]
    assert competition_ranks([]) == []


def test_certify_values():
    cert = certify_values(10, 9)
    assert cert.gap_ratio == pytest.approx(111.1111111111)
    assert cert.within_tolerance
    below = certify_values(8.999999, 9.0, gap_tol=1e-6)
    assert below.below_bound and below.within_tolerance
    assert not certify_values(8, 9, gap_tol=1e-6).within_tolerance
    assert certify_values(8.95, 9, gap_tol=0.1, gap_mode="abs").within_tolerance
    with pytest.raises(ValueError):
        certify_values(1, 0)


def test_certify_checks_graph_hash(golden_table):
    tok = Tokeniser([b"bc", b"bd", b"be"], provenance={"graph_hash": "a" * 64})
    assert certify(tok, golden_table, 9.0).gap_ratio == pytest.approx(100.0)
    assert certify(tok, golden_table, 9.0, graph_hash="a" * 64).tokenised_value == 9
    with pytest.raises(ConfigMismatchError):
        certify(tok, golden_table, 9.0, graph_hash="b" * 64)


def test_corpus_objective_weights():
    table = PretokenTable.from_counts([(b"abab", 2), (b"b", 3)])
    assert corpus_objective(Tokeniser([b"ab"]), table) == 2 * 2 + 3


def test_intrinsic_metrics():
    tok = Tokeniser([b"ab"], ["<|bos|>"], pretokenizer_preset="whole")
    report = intrinsic_metrics(tok, [Document("x", b"abab"), b"abc", "a"])
    # tokens: ab ab | ab c | a
    assert report.total_tokens == 5
    assert report.total_bytes == 8
    assert report.distinct_tokens_used == 3
    assert report.bytes_per_token == pytest.approx(8 / 5)
    assert report.vocabulary_utilisation == pytest.approx(3 / 257)
    assert report.type_token_ratio == pytest.approx(3 / 5)
    assert report.tokens_per_document == pytest.approx(5 / 3)
    assert report.avg_token_length_bytes == pytest.approx(4 / 3)
    # ranks: ab 1 (x3), a and c share rank 2
    assert report.avg_token_rank == pytest.approx((3 * 1 + 2 + 2) / 5)
    p = np.array([3, 1, 1]) / 5
    assert report.renyi_entropy[1.0] == pytest.approx(-(p * np.log2(p)).sum())
    assert set(report.to_dict()["renyi_entropy"]) == {"1", "2.5"}
    assert [c for c, _ in report.row()][0] == "Vocabulary Utilisation"


def test_intrinsic_metrics_empty():
    tok = Tokeniser([])
    with pytest.raises(ValueError):
        intrinsic_metrics(tok, [])
    assert intrinsic_metrics(tok, [b""]).total_tokens == 0


def test_jaccard():
    assert jaccard([b"ab", b"cd"], [b"ab"]) == 0.5
    assert jaccard([], []) == 1.0
    mat, mean = jaccard_stability([[b"ab"], [b"ab", b"cd"], [b"cd"]])
    assert np.allclose(np.diag(mat), 1)
    assert np.allclose(mat, mat.T)
    assert mean == pytest.approx((0.5 + 0.0 + 0.5) / 3)
    with pytest.raises(ValueError):
        jaccard_stability([[b"ab"]])
