import itertools
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from dmdp.baselines import GraphTooLarge, bf_positive_cycle, karp_mean, optimal_cycles, oracle_enumerate, simple_cycles
from dmdp.generators import gen_two_out_random, gen_uniform_m, integer_rewards, rational_rewards
from dmdp.graph import Graph, parse_edge_list
from dmdp.scalar import EXACT, Approx

T3 = parse_edge_list((Path(__file__).parent / "data" / "t3.dmdp").read_text())[0]


def brute_force_cycles(g):
    """Every simple cycle by permutation search, rotated to start at its minimum."""
    succ = [{e.target for e in es} for es in g.adj]
    found = set()
    for k in range(1, g.n + 1):
        for vs in itertools.permutations(range(g.n), k):
            if vs[0] != min(vs):
                continue
            if all(vs[(i + 1) % k] in succ[v] for i, v in enumerate(vs)):
                found.add(vs)
    return found


def test_oracle_self_loop():
    r = oracle_enumerate(Graph.from_edges(1, [(0, 0, 3)]))
    assert r.mu == 3 and r.cycles_examined == 1


def test_oracle_t3():
    r = oracle_enumerate(T3)
    assert r.mu == Fraction(13, 2)
    assert r.cycle.vertices == (1, 2)
    assert r.cycles_examined == 3     # {0,1}, {1,2} and {0,2,1}
    assert r.optimal_cycles == 1


def test_oracle_disjoint_loops():
    g = Graph.from_edges(2, [(0, 0, 1), (1, 1, 2)])
    assert oracle_enumerate(g).mu == 2


def test_oracle_parallel_edges_use_best():
    g = Graph.from_edges(2, [(0, 1, 1), (0, 1, 9), (1, 0, 1)])
    r = oracle_enumerate(g)
    assert r.mu == 5 and r.cycle.edges == (1, 0)


def test_oracle_size_guard():
    g = gen_two_out_random(15, 0)
    with pytest.raises(GraphTooLarge):
        oracle_enumerate(g)
    assert oracle_enumerate(g, max_n=15).mu == karp_mean(g)


def test_optimal_cycles_ties():
    g = Graph.from_edges(3, [(0, 0, 2), (1, 2, 1), (2, 1, 3), (0, 1, 0)])
    assert {c.vertices for c in optimal_cycles(g)} == {(0,), (1, 2)}


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.integers(0, 10**6), st.integers(1, 3))
def test_johnson_matches_brute_force(n, seed, d):
    g = gen_uniform_m(n, d * n, seed, EXACT, integer_rewards())
    got = [tuple(vs) for vs in simple_cycles(g)]
    assert len(got) == len(set(got))
    assert set(got) == brute_force_cycles(g)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 10), st.integers(0, 10**6), st.booleans())
def test_karp_agrees_with_oracle(n, seed, rational):
    reward = rational_rewards() if rational else integer_rewards()
    g = gen_uniform_m(n, 2 * n, seed, EXACT, reward)
    mu = oracle_enumerate(g).mu
    assert karp_mean(g) == mu
    assert karp_mean(g.to_float()) == pytest.approx(float(mu))


def test_karp_t3():
    assert karp_mean(T3) == Fraction(13, 2)


def test_bf_t3():
    assert bf_positive_cycle(T3, 6)
    assert not bf_positive_cycle(T3, Fraction(13, 2))
    assert not bf_positive_cycle(T3, 7)


def test_bf_self_loop():
    g = Graph.from_edges(1, [(0, 0, 3)])
    assert bf_positive_cycle(g, Fraction(29, 10))
    assert not bf_positive_cycle(g, 3)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 10), st.integers(0, 10**6), st.integers(1, 12))
def test_bf_threshold(n, seed, q):
    g = gen_uniform_m(n, 2 * n, seed, EXACT, rational_rewards())
    mu = oracle_enumerate(g).mu
    step = Fraction(1, q)
    assert bf_positive_cycle(g, mu - step)
    assert not bf_positive_cycle(g, mu)
    assert not bf_positive_cycle(g, mu + step)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 10**6))
def test_bf_float_mode(n, seed):
    g = gen_two_out_random(n, seed, Approx())
    mu = oracle_enumerate(g).mu
    assert not bf_positive_cycle(g, mu)
    assert bf_positive_cycle(g, mu - 1e-6)
    assert not bf_positive_cycle(g, mu + 1e-6)
