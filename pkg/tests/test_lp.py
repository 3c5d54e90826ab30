import io
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from convextok.corpus import PretokenTable
from convextok.errors import DimensionMismatchError
from convextok.lp import SolverOptions, assemble_lp, duality_gap, solve_pdhg, write_lp
from convextok.tokgraph import EdgePolicy, build_graph

# LP optima from HiGHS on a dense model built directly from the strings
GOLDEN_LP = [15, 12, 10.5, 9, 8, 7, 6, 6]
OVERLAP_LP = [7, 3, 2, 2, 2, 2, 2]


def _problem(table, budget):
    return assemble_lp(build_graph(table, EdgePolicy.unbounded()), budget)


def test_assemble_shapes(golden_table):
    p = _problem(golden_table, 3)
    # one free edge per byte; abc-like words carry ab, bc, abc and the short
    # words one priced edge each
    assert (p.n_free, p.n_priced, p.n_colour) == (15, 12, 7)
    assert p.n_cols == 34
    assert p.n_eq == 21
    assert p.n_ub == 12 + 1
    assert p.b_ub[-1] == 3
    assert np.all(p.lb == 0) and np.all(p.ub == 1)
    # objective prices edges only
    assert np.all(p.c[p.colour_cols] == 0)
    assert np.all(p.c[: p.n_free + p.n_priced] == 1)


def test_flow_rows_sum_to_zero(overlap_table):
    p = _problem(overlap_table, 2)
    ones = np.ones(p.n_free + p.n_priced)
    assert np.allclose(np.asarray(p.A_eq[:, : len(ones)].sum(axis=0)).ravel(), 0)
    assert p.b_eq.sum() == 0


@pytest.mark.parametrize("budget,value", list(enumerate(GOLDEN_LP)))
def test_golden_lp_values(golden_table, budget, value):
    sol = solve_pdhg(_problem(golden_table, budget))
    assert sol.converged
    assert sol.objective == pytest.approx(value, abs=1e-5)
    assert sol.dual_value <= value


@pytest.mark.parametrize("budget,value", list(enumerate(OVERLAP_LP)))
def test_overlap_lp_values(overlap_table, budget, value):
    sol = solve_pdhg(_problem(overlap_table, budget))
    assert sol.objective == pytest.approx(value, abs=1e-5)


def test_solution_blocks(golden_table):
    p = _problem(golden_table, 3)
    sol = solve_pdhg(p)
    assert len(sol.f) == p.n_free and len(sol.p) == p.n_priced and len(sol.c) == p.n_colour
    assert sol.c.sum() <= 3 + 1e-6
    stats = sol.integrality_stats(3)
    assert stats["c_ones"] <= stats["c_nonzeros"] <= p.n_colour
    assert stats["c_ones_pct"] == pytest.approx(100.0 * stats["c_ones"] / 3)
    assert sol.status == "optimal"


def test_duality_gap_recomputes(golden_table):
    p = _problem(golden_table, 2)
    sol = solve_pdhg(p)
    primal, dual, gap = duality_gap(p, sol)
    assert primal == pytest.approx(sol.objective)
    assert dual <= primal
    assert gap == pytest.approx(primal - dual)


def test_duality_gap_shape_mismatch(golden_table, overlap_table):
    sol = solve_pdhg(_problem(overlap_table, 1))
    with pytest.raises(DimensionMismatchError):
        duality_gap(_problem(golden_table, 1), sol)


def test_unpreconditioned_agrees(overlap_table):
    p = _problem(overlap_table, 1)
    a = solve_pdhg(p)
    b = solve_pdhg(p, SolverOptions(precondition=False))
    assert a.objective == pytest.approx(b.objective, abs=1e-5)


def test_max_iters_reports_not_converged(golden_table):
    sol = solve_pdhg(_problem(golden_table, 3), SolverOptions(max_iters=5, check_every=1))
    assert not sol.converged
    assert sol.status == "iteration_limit"
    assert sol.dual_value <= 9


def test_absolute_gap_mode(overlap_table):
    sol = solve_pdhg(_problem(overlap_table, 1), SolverOptions(gap_mode="abs", gap_tol=1e-7))
    assert sol.converged and abs(sol.gap) <= 1e-7


def test_bad_options():
    with pytest.raises(ValueError):
        SolverOptions(gap_mode="huh")
    with pytest.raises(ValueError):
        SolverOptions(gap_tol=0)


def test_write_lp(overlap_table):
    buf = io.StringIO()
    write_lp(_problem(overlap_table, 2), buf)
    text = buf.getvalue()
    assert text.lower().startswith(("\\", "minimize"))
    assert "end" in text.lower()


def test_agrees_with_highs_on_weighted_corpora():
    rng = random.Random(3)
    for _ in range(20):
        entries = oracles.random_entries(rng, max_pretokens=5, max_len=7, max_count=9)
        budget = rng.randint(0, 6)
        sol = solve_pdhg(_problem(PretokenTable.from_counts(entries), budget))
        assert sol.objective == pytest.approx(oracles.lp_value(entries, budget), abs=1e-5)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.text(alphabet="ab", min_size=1, max_size=6), min_size=1, max_size=4),
    st.integers(0, 4),
)
def test_lp_invariants(strings, budget):
    table = PretokenTable.from_strings(strings)
    p = _problem(table, budget)
    sol = solve_pdhg(p)
    assert sol.converged
    assert sol.dual_value <= sol.objective
    # the all-bytes path is feasible and the longest-token bound holds
    assert sol.objective <= table.total_bytes + 1e-6
    assert sol.objective >= len(table.entries) - 1e-6
    assert np.all(sol.x >= 0) and np.all(sol.x <= 1)
    assert sol.c.sum() <= budget + 1e-6
