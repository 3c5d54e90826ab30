import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from convextok.corpus import PretokenTable
from convextok.errors import TooLargeError
from convextok.lp.oracle import brute_force_ip, path_objective
from convextok.tokgraph import EdgePolicy, build_graph


def _graph(table):
    return build_graph(table, EdgePolicy.unbounded())


# frozen from the independent enumeration in oracles.ip_value
GOLDEN_IP = [15, 12, 11, 9, 8, 7, 6, 6]


@pytest.mark.parametrize("budget,value", list(enumerate(GOLDEN_IP)))
def test_golden_optima(golden_table, budget, value):
    assert brute_force_ip(_graph(golden_table), budget)[0] == value


def test_golden_tie_break_prefers_short_tokens(golden_table):
    # {abc, abd, abe} also reaches 9; fewer total bytes wins
    assert brute_force_ip(_graph(golden_table), 3)[1] == (b"bc", b"bd", b"be")


def test_single_long_token():
    table = PretokenTable.from_strings(["abab"])
    assert brute_force_ip(_graph(table), 1) == (1, (b"abab",))


def test_path_objective(overlap_table):
    graph = _graph(overlap_table)
    ab = graph.colour_index[b"ab"]
    # abaa -> ab a a, aba -> ab a
    assert path_objective(graph, {ab}) == 5
    assert path_objective(graph, set()) == 7


def test_size_guard():
    table = PretokenTable.from_strings(["abcdefghij"])
    with pytest.raises(TooLargeError):
        brute_force_ip(_graph(table), 10, limit=10)


def test_matches_independent_enumeration():
    rng = random.Random(12)
    for _ in range(40):
        entries = oracles.random_entries(rng, max_len=5)
        budget = rng.randint(0, 3)
        graph = _graph(PretokenTable.from_counts(entries))
        assert brute_force_ip(graph, budget)[0] == oracles.ip_value(entries, budget)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.text(alphabet="ab", min_size=1, max_size=5), min_size=1, max_size=3),
    st.integers(0, 3),
)
def test_more_budget_never_hurts(strings, budget):
    graph = _graph(PretokenTable.from_strings(strings))
    value, vocab = brute_force_ip(graph, budget)
    assert len(vocab) <= budget
    assert brute_force_ip(graph, budget + 1)[0] <= value
    assert path_objective(graph, {graph.colour_index[t] for t in vocab}) == value
