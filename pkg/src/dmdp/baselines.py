"""Independent ground truth: exhaustive cycle enumeration, Karp's
characterisation, and Bellman-Ford positive-cycle testing."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .graph import CycleReport, Graph, has_cycle, scc_decompose
from .scalar import Number

ORACLE_MAX_N = 14


class GraphTooLarge(ValueError):
    pass


@dataclass
class OracleResult:
    mu: Number
    cycle: CycleReport
    cycles_examined: int
    optimal_cycles: int = 1


def _best_parallel_edges(g: Graph) -> list[dict[int, int]]:
    """For each u: target -> index of the highest-reward u->target edge (first on ties)."""
    out = []
    for es in g.adj:
        best: dict[int, int] = {}
        for i, (v, r) in enumerate(es):
            if v not in best or r > es[best[v]].reward:
                best[v] = i
        out.append(best)
    return out


def simple_cycles(g: Graph):
    """Yield every simple cycle as a vertex list, once each (Johnson's algorithm).

    Parallel edges collapse to one vertex-level cycle.
    """
    n = g.n
    succ = [sorted({e.target for e in es}) for es in g.adj]
    for s in range(n):
        # restrict to vertices >= s; a cycle is reported from its lowest vertex
        blocked = [False] * n
        bmap: list[set] = [set() for _ in range(n)]
        path = [s]
        blocked[s] = True
        stack = [(s, iter([w for w in succ[s] if w >= s]))]
        closed = [False]

        def unblock(u):
            todo = [u]
            while todo:
                w = todo.pop()
                if blocked[w]:
                    blocked[w] = False
                    todo.extend(bmap[w])
                    bmap[w].clear()

        while stack:
            v, it = stack[-1]
            nxt = next(it, None)
            if nxt is not None:
                if nxt == s:
                    yield list(path)
                    closed[-1] = True
                elif not blocked[nxt]:
                    path.append(nxt)
                    blocked[nxt] = True
                    closed.append(False)
                    stack.append((nxt, iter([w for w in succ[nxt] if w >= s])))
                continue
            stack.pop()
            path.pop()
            found = closed.pop()
            if found:
                unblock(v)
            else:
                for w in succ[v]:
                    if w >= s:
                        bmap[w].add(v)
            if closed:
                closed[-1] = closed[-1] or found


def oracle_enumerate(g: Graph, max_n: int = ORACLE_MAX_N) -> OracleResult:
    """Exact optimum by enumerating all simple cycles (``n <= max_n``)."""
    if g.n > max_n:
        raise GraphTooLarge(f"enumeration oracle limited to n <= {max_n}, got {g.n}")
    pick = _best_parallel_edges(g)
    arith = g.arith
    best = None
    count = 0
    ties = 0
    for vs in simple_cycles(g):
        count += 1
        es = [pick[u][vs[(k + 1) % len(vs)]] for k, u in enumerate(vs)]
        c = CycleReport.build(g, vs, es)
        if best is None or arith.gt(c.mean, best.mean):
            best, ties = c, 1
        elif arith.eq(c.mean, best.mean):
            ties += 1
    if best is None:
        raise AssertionError("a graph with out-degree >= 1 everywhere has a cycle")
    return OracleResult(best.mean, best, count, ties)


def optimal_cycles(g: Graph, max_n: int = ORACLE_MAX_N) -> list[CycleReport]:
    """Every simple cycle attaining the optimum (``n <= max_n``)."""
    mu = oracle_enumerate(g, max_n).mu
    pick = _best_parallel_edges(g)
    out = []
    for vs in simple_cycles(g):
        es = [pick[u][vs[(k + 1) % len(vs)]] for k, u in enumerate(vs)]
        c = CycleReport.build(g, vs, es)
        if g.arith.eq(c.mean, mu):
            out.append(c)
    return out


def karp_mean(g: Graph) -> Number:
    """Karp's maximum cycle mean, maximised over strongly connected components.

    Per component with ``k`` vertices and source ``s`` (its lowest vertex),
    ``D_j(v)`` is the best total reward of a length-j walk from s to v inside
    the component and ``mu = max_v min_{j<k} (D_k(v) - D_j(v)) / (k - j)``.
    Unreachable entries are ``None`` and never enter the arithmetic.
    """
    best = None
    for comp in scc_decompose(g):
        if not has_cycle(g, comp):
            continue
        mu = _karp_component(g, comp)
        if best is None or g.arith.gt(mu, best):
            best = mu
    return best


def _karp_component(g: Graph, comp: list[int]) -> Number:
    sub, _, _ = g.induced(comp)
    k = sub.n
    D = [[None] * k for _ in range(k + 1)]
    D[0][0] = sub.arith.coerce(0)
    for j in range(1, k + 1):
        prev, cur = D[j - 1], D[j]
        for u, es in enumerate(sub.adj):
            du = prev[u]
            if du is None:
                continue
            for v, r in es:
                val = du + r
                if cur[v] is None or val > cur[v]:
                    cur[v] = val
    best = None
    for v in range(k):
        dk = D[k][v]
        if dk is None:
            continue
        worst = None
        for j in range(k):
            dj = D[j][v]
            if dj is None:
                continue
            q = (dk - dj) / (k - j)
            if worst is None or q < worst:
                worst = q
        if worst is not None and (best is None or worst > best):
            best = worst
    return best


def bf_positive_cycle(g: Graph, mu) -> bool:
    """True iff some cycle has positive total under rewards ``r(e) - mu``.

    Longest-path Bellman-Ford with a FIFO queue from a virtual source joined
    to every vertex by a zero edge. Detection: the predecessor graph is checked
    for a cycle after every ``n`` relaxations, and a vertex still queued after
    ``n`` passes also proves a positive cycle. In float mode an update must beat
    the old label by more than the graph's tolerance.
    """
    arith = g.arith
    mu = arith.coerce(mu)
    n = g.n
    adj = [[(v, r - mu) for v, r in es] for es in g.adj]
    dist = [arith.coerce(0)] * n
    parent = [-1] * n
    queue = deque(range(n))
    queued = [True] * n
    exact = arith.exact
    eps = arith.eps
    relaxations = 0
    passes = 0
    pass_end = n
    processed = 0
    while queue:
        u = queue.popleft()
        queued[u] = False
        du = dist[u]
        for v, w in adj[u]:
            cand = du + w
            dv = dist[v]
            if cand <= dv:
                continue
            if not exact and cand - dv <= eps * max(1.0, abs(cand), abs(dv)):
                continue
            dist[v] = cand
            parent[v] = u
            relaxations += 1
            if relaxations % n == 0 and _parent_cycle(parent):
                return True
            if not queued[v]:
                queued[v] = True
                queue.append(v)
        processed += 1
        if processed == pass_end:
            passes += 1
            if passes >= n and queue:
                return True
            processed = 0
            pass_end = len(queue)
    return False


def _parent_cycle(parent: list[int]) -> bool:
    n = len(parent)
    state = [0] * n
    for start in range(n):
        if state[start]:
            continue
        path = []
        u = start
        while u >= 0 and state[u] == 0:
            state[u] = 1
            path.append(u)
            u = parent[u]
        if u >= 0 and state[u] == 1:
            return True
        for w in path:
            state[w] = 2
    return False

