import io
import random
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from dmdp.baselines import optimal_cycles, oracle_enumerate
from dmdp.generators import (derive_seed, gen_two_out_random, gen_uniform_m, integer_rewards, random_initial_values,
                             rational_rewards)
from dmdp.graph import Graph, Walk, mean_zero_parallel, parse_edge_list
from dmdp.scalar import EXACT, Approx
from dmdp.value_iteration import (DominanceTracker, ValueHistory, ValueState, best_cycle, detect_policy_cycles,
                                  gauss_seidel_step, highest_values_settled, policy_hash, run_vi, track_dominance,
                                  value_of_walk, vi_detect, vi_step)

T3 = parse_edge_list((Path(__file__).parent / "data" / "t3.dmdp").read_text())[0]
MU3 = Fraction(13, 2)


def run(g, steps, init=None):
    s = ValueState.initial(g, init)
    out = []
    for _ in range(steps):
        s = vi_step(g, s)
        out.append(s)
    return out


def test_single_self_loop():
    g = Graph.from_edges(1, [(0, 0, 3)])
    s = vi_step(g, ValueState.initial(g, [10]))
    assert s.values == (13,) and s.chosen == (0,)


def test_t3_trace_and_lazy_tie():
    s1, s2, s3 = run(T3, 3)
    assert s1.values == (5, 7, 6) and s1.chosen == (1, 1, 0)
    # vertex 0 ties: 4 + 7 == 5 + 6; it keeps 0->2
    assert s2.values == (11, 13, 13) and s2.chosen[0] == 1
    assert s3.values == (18, 20, 19)
    assert s2.previous == s1.values


def test_lowest_index_breaks_ties_without_history():
    g = Graph.from_edges(3, [(0, 1, 1), (0, 2, 1), (1, 1, 0), (2, 2, 0)])
    assert vi_step(g, ValueState.initial(g)).chosen[0] == 0


def test_lazy_rule_keeps_previous_tied_edge():
    g = Graph.from_edges(3, [(0, 1, 1), (0, 2, 1), (1, 1, 0), (2, 2, 0)])
    s = ValueState(1, (0, 0, 0), (1, 0, 0))
    assert vi_step(g, s).chosen[0] == 1


def test_initial_values_length_checked():
    with pytest.raises(ValueError):
        ValueState.initial(T3, [0, 0])


def test_gauss_seidel_sweep():
    s = gauss_seidel_step(T3, ValueState.initial(T3), [0, 1, 2])
    assert s.values == (5, 10, 16)
    with pytest.raises(ValueError):
        gauss_seidel_step(T3, ValueState.initial(T3), [0, 0, 1])
    g = Graph.from_edges(1, [(0, 0, 3)])
    assert gauss_seidel_step(g, ValueState.initial(g, [2])).values == (5,)


def _gs_maxima_settle(g, init, sweeps):
    s = ValueState.initial(g, init)
    best = list(s.values)
    last = [0] * g.n
    for k in range(1, sweeps + 1):
        s = gauss_seidel_step(g, s)
        for v, x in enumerate(s.values):
            if x > best[v]:
                best[v], last[v] = x, k
    return last


def test_gauss_seidel_mean_zero_t3():
    z = mean_zero_parallel(T3, MU3)
    assert max(_gs_maxima_settle(z, None, 30)) <= 3


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10**6))
def test_gauss_seidel_mean_zero_boundedness(n, seed):
    g = gen_uniform_m(n, 2 * n, seed, EXACT, integer_rewards())
    z = mean_zero_parallel(g, oracle_enumerate(g).mu)
    init = random_initial_values(n, seed)
    assert max(_gs_maxima_settle(z, init, 4 * n)) <= n


# ---- walk values


def test_value_of_walk_examples():
    h = ValueHistory(3)
    s = ValueState.initial(T3)
    h.push(s.values)
    for _ in range(2):
        s = vi_step(T3, s)
        h.push(s.values)
    assert value_of_walk(T3, Walk.from_vertices(T3, [0, 1, 2]), h) == 11
    g = Graph.from_edges(2, [(0, 1, 7), (1, 0, 0)])
    s1 = vi_step(g, ValueState.initial(g))
    assert value_of_walk(g, Walk.from_vertices(g, [0, 1]), [(0, 0), s1.values]) == 7


def test_value_of_walk_needs_history():
    with pytest.raises(IndexError):
        value_of_walk(T3, Walk.from_vertices(T3, [0, 1, 2]), [(0, 0, 0), (5, 7, 6)])
    h = ValueHistory(1)
    h.push((0, 0, 0))
    with pytest.raises(IndexError):
        value_of_walk(T3, Walk.from_vertices(T3, [0, 1, 2]), h)


def _walks(g, v, length):
    if length == 0:
        yield []
        return
    for i, e in enumerate(g.adj[v]):
        for rest in _walks(g, e.target, length - 1):
            yield [(v, i)] + rest


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10**6))
def test_values_are_best_walk_values(n, seed):
    """x_v(t) is the best R(w) + x_end(0) over length-t walks w from v."""
    g = gen_uniform_m(n, 2 * n, seed, EXACT, rational_rewards())
    init = random_initial_values(n, seed, bound=20)
    states = run(g, 4, init)
    for t, s in enumerate(states, start=1):
        for v in range(n):
            best = max(Walk(tuple(w)).total(g) + init[Walk(tuple(w)).end(g)] for w in _walks(g, v, t))
            assert s.values[v] == best


# ---- policy cycles


def test_detect_policy_cycles_examples():
    (c,) = detect_policy_cycles(T3, (1, 1, 0))
    assert c.vertices == (1, 2) and c.mean == MU3
    (c,) = detect_policy_cycles(T3, (0, 0, 0))
    assert c.vertices == (0, 1) and c.mean == Fraction(9, 2)
    g = Graph.from_edges(3, [(0, 0, 1), (1, 1, 2), (2, 2, 3)])
    cs = detect_policy_cycles(g, (0, 0, 0))
    assert [c.vertices for c in cs] == [(0,), (1,), (2,)]
    assert best_cycle(g, cs).mean == 3


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 30), st.integers(0, 10**6))
def test_policy_cycles_cover_functional_graph(n, seed):
    g = gen_uniform_m(n, 3 * n, seed, EXACT, integer_rewards())
    rng = random.Random(seed)
    chosen = [rng.randrange(len(es)) for es in g.adj]
    cycles = detect_policy_cycles(g, chosen)
    on_cycle = [v for c in cycles for v in c.vertices]
    assert len(on_cycle) == len(set(on_cycle))
    # every vertex reaches exactly one reported cycle
    for v in range(n):
        seen = set()
        while v not in seen:
            seen.add(v)
            v = g.adj[v][chosen[v]].target
        assert sum(v in c.vertices for c in cycles) == 1
    for c in cycles:
        c.check(g)


def test_policy_hash_is_stable():
    assert policy_hash((1, 1, 0)) == policy_hash([1, 1, 0]) != policy_hash((0, 1, 0))


# ---- run_vi


def test_run_vi_first_formation_t3():
    tr = run_vi(T3, None, 5, mu_star=MU3)
    assert tr.first_formation == 1 and all(tr.optimal_present)
    assert len(tr.policy_hashes) == 5 and tr.state.t == 5
    buf = io.StringIO()
    tr.write_csv(buf, EXACT)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,policy_hash,switches,max_value" and len(lines) == 6
    assert lines[1].endswith(",0,7")


def test_run_vi_stop_condition():
    tr = run_vi(T3, None, 50, stop=lambda s, cs: s.t == 4)
    assert tr.stopped and tr.state.t == 4
    with pytest.raises(ValueError):
        run_vi(T3, None, 0)


def test_run_vi_persists_after_convergence():
    """Once converged, an optimal cycle stays in every policy for 2n more iterations."""
    for seed in range(20):
        g = gen_two_out_random(8, seed, EXACT, integer_rewards())
        mu = oracle_enumerate(g).mu
        warm = 3 * g.n * g.n
        tr = run_vi(g, None, warm + 2 * g.n, mu_star=mu, record=False)
        assert all(tr.optimal_present[warm - 1:])


def test_vi_detect_t3():
    r = vi_detect(T3)
    assert r.mu == MU3 and r.iterations == 12 and r.found_at == 1


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 60), st.integers(0, 10**6))
def test_numpy_backend_matches_python(n, seed):
    g = gen_two_out_random(n, seed, Approx())
    a = run_vi(g, None, 3 * n, backend="python")
    b = run_vi(g, None, 3 * n, backend="numpy")
    assert a.policy_hashes == b.policy_hashes
    assert a.state.values == b.state.values
    assert a.state.chosen == b.state.chosen


def test_numpy_backend_with_ties_matches_python():
    # integer-valued float rewards produce many exact ties
    g = gen_uniform_m(40, 100, 3, Approx(), integer_rewards(0, 2))
    a = run_vi(g, None, 60, backend="python")
    b = run_vi(g, None, 60, backend="numpy")
    assert a.policy_hashes == b.policy_hashes and a.state.values == b.state.values


def test_numpy_backend_rejects_exact():
    with pytest.raises(ValueError):
        run_vi(T3, None, 3, backend="numpy")
    with pytest.raises(ValueError):
        run_vi(T3, None, 3, backend="fortran")


# ---- dominance


def test_dominance_t3_examples():
    z = mean_zero_parallel(T3, MU3)
    d1 = track_dominance(z, None, 1)
    assert [d1.best[v][0] for v in range(3)] == [0, Fraction(1, 2), 0]
    assert [d1.last[v][0] for v in range(3)] == [0, 1, 0]
    assert not d1.violations()
    d2 = track_dominance(z, None, 2)
    assert d2.best[1] == [0, Fraction(1, 2)]
    assert max(d2.last[1]) <= 6
    assert d2.highest(1) == Fraction(1, 2)


def test_dominance_argument_checks():
    with pytest.raises(ValueError):
        DominanceTracker(0, 3, EXACT)
    with pytest.raises(ValueError):
        track_dominance(T3, None, 2, horizon=5)


def test_dominance_tracker_flags_late_improvement():
    d = DominanceTracker(1, 2, EXACT)
    d.observe(0, [0, 0])
    d.observe(3, [1, 0])
    assert d.violations() == [(0, 0, 3)]


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 7), st.integers(0, 10**6), st.integers(1, 3))
def test_dominance_bound_property(n, seed, p):
    g = gen_uniform_m(n, 2 * n, seed, EXACT, rational_rewards())
    z = mean_zero_parallel(g, oracle_enumerate(g).mu)
    assert not track_dominance(z, random_initial_values(n, seed), p).violations()


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10**6))
def test_parallel_graphs_property(n, seed):
    g = gen_two_out_random(n, seed, EXACT, rational_rewards())
    mu = oracle_enumerate(g).mu
    init = random_initial_values(n, seed)
    for a, b in zip(run(g, 3 * n, init), run(mean_zero_parallel(g, mu), 3 * n, init)):
        assert a.chosen == b.chosen
        assert all(x - mu * a.t == y for x, y in zip(a.values, b.values))


def _optimal_edges(g, cycles):
    good: dict[int, set] = {}
    for c in cycles:
        for u, i in zip(c.vertices, c.edges):
            e = g.adj[u][i]
            good.setdefault(u, set()).update(
                j for j, f in enumerate(g.adj[u]) if f.target == e.target and f.reward == e.reward)
    return good


@pytest.mark.parametrize("seed", range(40))
def test_lazy_stability_after_highest_values(seed):
    """Once every optimal-cycle vertex has its highest values, a vertex sitting
    on an optimal-cycle edge never switches away."""
    n = 3 + seed % 6
    g = gen_uniform_m(n, 2 * n, derive_seed("lazy", seed), EXACT, integer_rewards())
    mu = oracle_enumerate(g).mu
    cycles = optimal_cycles(g)
    init = random_initial_values(n, seed)
    settled = highest_values_settled(mean_zero_parallel(g, mu), cycles, init)
    good = _optimal_edges(g, cycles)
    states = run(g, settled + 4 * n, init)
    for prev, cur in zip(states[settled:], states[settled + 1:]):
        for u, edges in good.items():
            if prev.chosen[u] in edges:
                assert cur.chosen[u] == prev.chosen[u]
