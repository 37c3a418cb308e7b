import io
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from dmdp.baselines import oracle_enumerate
from dmdp.generators import gen_two_out_random, gen_uniform_m, integer_rewards, rational_rewards
from dmdp.graph import Graph, parse_edge_list
from dmdp.history_walk import (SuperEdge, SuperEdgeTracker, audit_super_edges, choose_lowest_index,
                               history_walk_steps, run_history_walk, super_edge_update)
from dmdp.scalar import EXACT, Approx
from dmdp.value_iteration import ValueState, vi_step

T3 = parse_edge_list((Path(__file__).parent / "data" / "t3.dmdp").read_text())[0]


def test_super_edge_update_rules():
    assert super_edge_update(3, 3, Fraction(2), None) == (None, SuperEdge(3, 1, 2))
    assert super_edge_update(0, 2, Fraction(5), None) == (SuperEdge(2, 1, 5), None)
    assert super_edge_update(0, 2, Fraction(5), SuperEdge(1, 1, 6)) == (SuperEdge(1, 2, 11), None)
    own, cyc = super_edge_update(1, 2, Fraction(7), SuperEdge(1, 1, 6))
    assert own is None and cyc == SuperEdge(1, 2, 13) and cyc.mean == Fraction(13, 2)


def test_self_loop_ignores_neighbour_super_edge():
    own, cyc = super_edge_update(4, 4, Fraction(1), SuperEdge(0, 3, 9))
    assert own is None and cyc.length == 1


def test_lowest_index_rule_prefers_lowest_super_edge_end():
    g = Graph.from_edges(4, [(0, 1, 0), (0, 2, 0), (1, 1, 0), (2, 2, 0), (3, 3, 0)])
    x = (0, 0, 0, 0)
    # without super edges: lower end vertex, 1
    assert choose_lowest_index(g, 0, x, [None] * 4)[0] == 0
    # 1's super edge ends at 3, 2's at 0: the edge towards 2 wins
    supers = [None, SuperEdge(3, 1, 0), SuperEdge(0, 1, 0), None]
    assert choose_lowest_index(g, 0, x, supers)[0] == 1


def test_single_self_loop():
    g = Graph.from_edges(1, [(0, 0, 3)])
    r = run_history_walk(g, debug=True)
    assert r.mu == 3 and r.iterations == 2 and all(r.audits)
    assert r.witness.vertices == (0,)


def test_t3_trace():
    r = run_history_walk(T3, debug=True)
    assert r.mu == Fraction(13, 2)
    assert r.discovered_at == 5       # phase-2 iteration 2
    assert r.iterations == 6 and r.length == 2 and r.total == 13
    assert r.mu_trace == [None, Fraction(13, 2), Fraction(13, 2)]
    assert r.audits == [True, True, True]
    assert r.witness.vertices == (1, 2)


def test_t3_phase_two_super_edges():
    s = ValueState.initial(T3)
    for _ in range(3):
        s = vi_step(T3, s)
    tr = SuperEdgeTracker(T3, s.values)
    assert tr.step(4) == []
    # vertex 0 ties (4 + 20 == 5 + 19) and takes the lower end vertex, 1
    assert tr.supers == [SuperEdge(1, 1, 4), SuperEdge(2, 1, 7), SuperEdge(1, 1, 6)]
    found = tr.step(5)
    assert {d.vertex for d in found} == {1, 2}
    assert tr.supers[0] == SuperEdge(1, 2, 11)


def test_trace_csv():
    r = run_history_walk(T3, trace=True)
    buf = io.StringIO()
    r.write_trace_csv(buf, EXACT)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "iteration,vertex,end,length,total,cyclic_mean"
    assert len(lines) == 1 + 3 * 3
    assert "5,1,,,,13/2" in lines


def test_audit_detects_corruption():
    r = run_history_walk(T3, debug=True)
    history = [(1, 1, 0)] * 6
    good = [SuperEdge(2, 1, 5), None, None]
    assert audit_super_edges(T3, good, history)
    assert not audit_super_edges(T3, [SuperEdge(2, 1, 6), None, None], history)
    assert not audit_super_edges(T3, [SuperEdge(1, 1, 5), None, None], history)
    assert not audit_super_edges(T3, [SuperEdge(2, 9, 5), None, None], history)
    assert all(r.audits)


def test_audit_single_vertex():
    g = Graph.from_edges(1, [(0, 0, 2)])
    assert audit_super_edges(g, [None], [(0,)])


def test_history_walk_steps():
    history = [(0, 0, 0), (1, 1, 0)]
    assert history_walk_steps(T3, 0, 2, history) == [(0, 1), (2, 0)]
    with pytest.raises(IndexError):
        history_walk_steps(T3, 0, 3, history)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 10), st.integers(0, 10**6), st.booleans())
def test_matches_oracle_with_contract(n, seed, two_out):
    if two_out and n >= 2:
        g = gen_two_out_random(n, seed, EXACT, rational_rewards())
    else:
        g = gen_uniform_m(n, 2 * n, seed, EXACT, integer_rewards())
    mu = oracle_enumerate(g).mu
    r = run_history_walk(g, debug=True)
    assert r.mu == mu and r.iterations == 2 * g.n
    seen = [m for m in r.mu_trace if m is not None]
    assert seen == sorted(seen) and all(m <= mu for m in seen)
    assert all(r.audits)
    assert r.witness.mean == mu


def test_nonzero_initial_values():
    r = run_history_walk(T3, init=[100, -50, 3])
    assert r.mu == Fraction(13, 2)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 80), st.integers(0, 10**6))
def test_numpy_backend_matches_python(n, seed):
    g = gen_two_out_random(n, seed, Approx())
    a = run_history_walk(g, backend="python")
    b = run_history_walk(g, backend="numpy")
    assert (a.mu, a.length, a.total, a.discovered_at, a.discovered_by) == \
        (b.mu, b.length, b.total, b.discovered_at, b.discovered_by)
    assert a.mu_trace == b.mu_trace


def test_numpy_backend_with_ties_matches_python():
    g = gen_uniform_m(30, 70, 11, Approx(), integer_rewards(0, 2))
    a = run_history_walk(g, backend="python")
    b = run_history_walk(g, backend="numpy")
    assert (a.mu, a.discovered_at, a.discovered_by) == (b.mu, b.discovered_at, b.discovered_by)
