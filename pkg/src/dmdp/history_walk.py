"""The two-phase history-walk algorithm.

Phase 1 is ``n`` plain value iterations. Phase 2 runs ``n`` more while every
vertex carries at most one *super edge* ``(end, length, total)`` summarising
its history walk. When a vertex receives a super edge ending at itself it has
closed a cycle (or a closed walk made of cycles) and the running estimate of
the optimal mean is updated. Extra memory is one optional record per vertex.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence, TextIO

from .graph import CycleReport, Graph, split_closed_walk
from .scalar import Number
from .value_iteration import ValueState, vi_step


@dataclass(frozen=True)
class SuperEdge:
    end: int
    length: int
    total: Number

    @property
    def mean(self) -> Number:
        return self.total / self.length


def super_edge_update(u: int, v: int, reward: Number, prev: SuperEdge | None
                      ) -> tuple[SuperEdge | None, SuperEdge | None]:
    """Super edge of ``u`` after choosing edge ``u -> v`` with ``reward``.

    ``prev`` is v's super edge from the previous iteration. Returns ``(own,
    cyclic)``: ``own`` is u's new super edge (``None`` when undefined) and
    ``cyclic`` is the closed super edge ``(u, length, total)`` if one formed.
    """
    if u == v:
        return None, SuperEdge(u, 1, reward)
    if prev is None:
        return SuperEdge(v, 1, reward), None
    if prev.end == u:
        return None, SuperEdge(u, prev.length + 1, reward + prev.total)
    return SuperEdge(prev.end, prev.length + 1, reward + prev.total), None


def choose_lowest_index(g: Graph, u: int, x: Sequence, supers: Sequence[SuperEdge | None]) -> tuple[int, Number]:
    """Maximal edge of u; ties go to the edge whose resulting super edge would
    end at the lowest-numbered vertex, then to the lowest edge index.

    For an edge ``u -> v`` that end is v's super-edge end, or v itself when v
    has none (which is the plain lower-numbered-end-vertex rule at the start
    of tracking).
    """
    es = g.adj[u]
    vals = [r + x[v] for v, r in es]
    if len(es) == 1:
        return 0, vals[0]
    best = max(vals)
    eq = g.arith.eq
    pick = None
    pick_key = None
    for i, (v, _) in enumerate(es):
        if not eq(vals[i], best):
            continue
        key = supers[v].end if supers[v] is not None else v
        if pick is None or key < pick_key:
            pick, pick_key = i, key
    return pick, vals[pick]


@dataclass
class Discovery:
    iteration: int
    vertex: int
    edge: SuperEdge


class SuperEdgeTracker:
    """Value iteration with super edges; one :meth:`step` per iteration."""

    def __init__(self, g: Graph, values: Sequence):
        self.g = g
        self.values = tuple(values)
        self.supers: list[SuperEdge | None] = [None] * g.n
        self.chosen: tuple | None = None
        self.best: Discovery | None = None

    @property
    def mu(self) -> Number | None:
        return None if self.best is None else self.best.edge.mean

    def step(self, t: int) -> list[Discovery]:
        g = self.g
        x = self.values
        old = self.supers
        new_x, new_c, new_s = [], [], []
        found = []
        for u in range(g.n):
            i, val = choose_lowest_index(g, u, x, old)
            v, r = g.adj[u][i]
            own, cyc = super_edge_update(u, v, r, old[v])
            new_x.append(val)
            new_c.append(i)
            new_s.append(own)
            if cyc is not None:
                d = Discovery(t, u, cyc)
                found.append(d)
                if self.best is None or g.arith.gt(cyc.mean, self.best.edge.mean):
                    self.best = d
        self.values = tuple(new_x)
        self.chosen = tuple(new_c)
        self.supers = new_s
        return found


@dataclass
class HistoryWalkResult:
    """``mu`` is the best cyclic super-edge mean; ``length``/``total`` describe
    that closed walk. ``witness`` (debug mode only) is a simple cycle on it."""

    mu: Number
    length: int
    total: Number
    iterations: int
    discovered_at: int
    discovered_by: int
    witness: CycleReport | None = None
    mu_trace: list = field(default_factory=list)
    audits: list = field(default_factory=list)
    trace: list = field(default_factory=list)

    def write_trace_csv(self, fh: TextIO, arith=None) -> None:
        fmt = arith.format if arith is not None else str
        w = csv.writer(fh)
        w.writerow(["iteration", "vertex", "end", "length", "total", "cyclic_mean"])
        for it, u, se, cyc in self.trace:
            w.writerow([it, u,
                        "" if se is None else se.end,
                        "" if se is None else se.length,
                        "" if se is None else fmt(se.total),
                        "" if cyc is None else fmt(cyc.mean)])


def run_history_walk(g: Graph, init: Sequence | None = None, debug: bool = False,
                     trace: bool = False, backend: str = "auto") -> HistoryWalkResult:
    """Find the optimal mean in ``2n`` iterations with ``O(n)`` extra memory.

    ``debug`` keeps every iteration's edge choices, audits the super edges
    after each phase-2 iteration and reconstructs a witness cycle. ``trace``
    records per-vertex phase-2 rows for :meth:`HistoryWalkResult.write_trace_csv`.
    """
    from .value_iteration import _use_numpy

    if not debug and not trace and _use_numpy(g, backend):
        return _run_numpy(g, init)
    n = g.n
    state = ValueState.initial(g, init)
    history: list[tuple] = []
    for _ in range(n):
        state = vi_step(g, state)
        if debug:
            history.append(state.chosen)
    tracker = SuperEdgeTracker(g, state.values)
    result = HistoryWalkResult(None, 0, None, 2 * n, 0, -1)
    for t in range(n + 1, 2 * n + 1):
        found = tracker.step(t)
        result.mu_trace.append(tracker.mu)
        if debug:
            history.append(tracker.chosen)
            result.audits.append(audit_super_edges(g, tracker.supers, history))
        if trace:
            closed = {d.vertex: d.edge for d in found}
            for u in range(n):
                result.trace.append((t, u, tracker.supers[u], closed.get(u)))
    best = tracker.best
    if best is None:
        raise AssertionError("no cyclic super edge formed")
    result.mu, result.length, result.total = best.edge.mean, best.edge.length, best.edge.total
    result.discovered_at, result.discovered_by = best.iteration, best.vertex
    if debug:
        steps = history_walk_steps(g, best.vertex, best.edge.length, history[:best.iteration])
        cycles = split_closed_walk(g, steps)
        top = cycles[0]
        for c in cycles[1:]:
            if g.arith.gt(c.mean, top.mean):
                top = c
        result.witness = top
    return result


def history_walk_steps(g: Graph, u: int, length: int, history: Sequence[Sequence[int]]) -> list[tuple[int, int]]:
    """u's history walk of ``length`` edges; ``history[-1]`` holds the newest choices."""
    if length > len(history):
        raise IndexError("not enough retained choices")
    steps = []
    cur = u
    for j in range(length):
        i = history[-1 - j][cur]
        steps.append((cur, i))
        cur = g.adj[cur][i].target
    return steps


def audit_super_edges(g: Graph, supers: Sequence[SuperEdge | None], history: Sequence[Sequence[int]]) -> bool:
    """True iff every defined super edge matches its owner's history walk
    (same end vertex, length and total reward)."""
    for u, se in enumerate(supers):
        if se is None:
            continue
        if not 1 <= se.length <= len(history):
            return False
        steps = history_walk_steps(g, u, se.length, history)
        last_u, last_i = steps[-1]
        if g.adj[last_u][last_i].target != se.end:
            return False
        total = sum((g.adj[w][i].reward for w, i in steps), g.arith.coerce(0))
        if not g.arith.eq(total, se.total):
            return False
    return True


def _run_numpy(g: Graph, init) -> HistoryWalkResult:
    import numpy as np

    from .fast import CSRGraph

    csr = CSRGraph.from_graph(g)
    n = g.n
    x = np.zeros(n) if init is None else np.asarray(init, dtype=np.float64)
    chosen = None
    for _ in range(n):
        x, chosen = csr.step(x, chosen)
    se_end = np.full(n, -1, dtype=np.int64)
    se_len = np.zeros(n, dtype=np.int64)
    se_tot = np.zeros(n)
    best = None   # (mean, length, total, iteration, vertex)
    gt = g.arith.gt
    mu_trace = []
    for t in range(n + 1, 2 * n + 1):
        x, chosen, se_end, se_len, se_tot, (idx, lengths, totals) = csr.history_step(x, se_end, se_len, se_tot)
        for u, l, tot in zip(idx.tolist(), lengths.tolist(), totals.tolist()):
            mean = tot / l
            if best is None or gt(mean, best[0]):
                best = (mean, l, tot, t, u)
        mu_trace.append(None if best is None else best[0])
    mean, l, tot, it, u = best
    return HistoryWalkResult(mean, l, tot, 2 * n, it, u, mu_trace=mu_trace)
