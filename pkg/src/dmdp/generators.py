"""Instance generators: the two-out random model, the quadratic worst-case
family, and the small random corpora used for cross-checking solvers."""
from __future__ import annotations

import hashlib
import random
from fractions import Fraction
from typing import Callable, Iterator

from .graph import Edge, Graph
from .scalar import EXACT, Arith, Number

RewardSampler = Callable[[random.Random], object]


def uniform_unit(rng: random.Random) -> float:
    return rng.random()


def integer_rewards(lo: int = -20, hi: int = 20) -> RewardSampler:
    return lambda rng: rng.randint(lo, hi)


def rational_rewards(lo: int = -20, hi: int = 20, max_den: int = 8) -> RewardSampler:
    def sample(rng: random.Random) -> Fraction:
        den = rng.randint(1, max_den)
        return Fraction(rng.randint(lo * den, hi * den), den)
    return sample


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary parts (independent of PYTHONHASHSEED)."""
    digest = hashlib.sha256(":".join(map(str, parts)).encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def gen_two_out_random(n: int, seed: int, arith: Arith = EXACT,
                       reward: RewardSampler = uniform_unit) -> Graph:
    """Every vertex gets two out-edges; each target is uniform over the other
    ``n - 1`` vertices (drawn independently, so parallel edges can occur) and
    rewards default to uniform on [0, 1)."""
    if n < 2:
        raise ValueError("two-out model needs n >= 2")
    rng = random.Random(seed)
    adj = []
    for u in range(n):
        es = []
        for _ in range(2):
            v = rng.randrange(n - 1)
            if v >= u:
                v += 1
            es.append(Edge(v, arith.coerce(reward(rng))))
        adj.append(tuple(es))
    return Graph(tuple(adj), arith)


def gen_uniform_m(n: int, m: int, seed: int, arith: Arith = EXACT,
                  reward: RewardSampler = integer_rewards()) -> Graph:
    """Random digraph with exactly ``m >= n`` edges and out-degree >= 1.

    Each vertex gets one edge, the remaining ``m - n`` sources are uniform;
    targets are uniform over all vertices (self-loops and parallel edges allowed).
    """
    if n < 1 or m < n:
        raise ValueError("need n >= 1 and m >= n")
    rng = random.Random(seed)
    sources = list(range(n)) + [rng.randrange(n) for _ in range(m - n)]
    rng.shuffle(sources)
    adj: list[list[Edge]] = [[] for _ in range(n)]
    for u in sources:
        adj[u].append(Edge(rng.randrange(n), arith.coerce(reward(rng))))
    return Graph(tuple(tuple(es) for es in adj), arith)


def gen_worst_case(k: int) -> tuple[Graph, list[Fraction]]:
    """Graph with 3k-2 vertices on which the optimal cycle first forms after
    Theta(k^2) value-iteration steps.

    Layout (vertex ids):

    * top row ``c_j = j`` for ``j < k``: the zero-reward cycle c_0 -> ... -> c_{k-1} -> c_0;
    * middle row ``a_i = k + i - 1`` for ``1 <= i < k``: a path a_1 -> ... -> a_{k-1} -> s;
    * bottom row ``b_i = 2k - 1 + i`` for ``i < k - 1``: a cycle of length k-1 through
      ``s = b_0`` whose only non-zero reward is -1 on the edge leaving s.

    Besides its cycle edge (listed first), c_j has an exit to a_{j+1} (c_{k-1}
    exits straight to s), so every exit reaches s after exactly k - j steps.
    Exit rewards (k-1-j)/k favour leaving early. Walks from the top row reach s
    only with lengths a*k + b*(k-1), so until t ~ k^2 some top-row vertex always
    finds leaving immediately strictly best.

    Initial values: 0 at s, -k^3 everywhere else.
    """
    if k < 2:
        raise ValueError("worst-case family needs k >= 2")
    n = 3 * k - 2
    s = 2 * k - 1
    adj: list[list[Edge]] = [[] for _ in range(n)]
    for j in range(k):
        exit_to = k + j if j < k - 1 else s
        adj[j] = [Edge((j + 1) % k, Fraction(0)), Edge(exit_to, Fraction(k - 1 - j, k))]
    for i in range(1, k):
        a = k + i - 1
        adj[a] = [Edge(a + 1 if i < k - 1 else s, Fraction(0))]
    for i in range(k - 1):
        b = 2 * k - 1 + i
        nxt = 2 * k - 1 + (i + 1) % (k - 1)
        adj[b] = [Edge(nxt, Fraction(-1) if i == 0 else Fraction(0))]
    values = [Fraction(-k ** 3)] * n
    values[s] = Fraction(0)
    return Graph(tuple(tuple(es) for es in adj), EXACT), values


def worst_case_cycle(k: int) -> list[tuple[int, int]]:
    """``(vertex, edge_index)`` pairs of the optimal top-row cycle of :func:`gen_worst_case`."""
    return [(j, 0) for j in range(k)]


def random_initial_values(n: int, seed: int, arith: Arith = EXACT, bound: int | None = None) -> list[Number]:
    """Integer values uniform in ``[-bound, bound]`` (default ``n**3``)."""
    rng = random.Random(seed)
    bound = n ** 3 if bound is None else bound
    return [arith.coerce(rng.randint(-bound, bound)) for _ in range(n)]


def gen_corpus(count: int, seed: int, n_min: int = 2, n_max: int = 10,
               arith: Arith = EXACT) -> Iterator[tuple[int, Graph]]:
    """Mixed correctness corpus of small graphs.

    Cycles through four shapes: two-out with integer rewards, two-out with
    rationals, uniform-m with integers, uniform-m with rationals. Rewards lie
    in [-20, 20]; rational denominators are at most 8. Yields ``(seed, graph)``.
    """
    ints, rats = integer_rewards(), rational_rewards()
    for i in range(count):
        s = derive_seed("corpus", seed, i)
        rng = random.Random(s)
        n = rng.randint(n_min, n_max)
        shape = i % 4
        sampler = ints if shape in (0, 2) else rats
        if shape < 2:
            g = gen_two_out_random(n, s, arith, sampler)
        else:
            m = rng.randint(n, min(3 * n, n * n))
            g = gen_uniform_m(n, m, s, arith, sampler)
        yield s, g
