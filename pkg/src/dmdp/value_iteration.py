"""Value iteration on deterministic MDPs.

The update is ``x_u(t) = max over edges u->v of r(e) + x_v(t-1)``. Edge choices
follow the lazy rule: a vertex keeps last iteration's edge whenever it still
ties for the maximum, otherwise it takes the lowest-index maximal edge.
"""
from __future__ import annotations

import csv
import hashlib
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence, TextIO

from .graph import CycleReport, Graph, Walk, canonical_cycle
from .scalar import Number


@dataclass(frozen=True)
class ValueState:
    """Values ``x(t)``, the visited policy at time ``t`` and ``x(t-1)``.

    ``chosen`` is ``None`` at ``t = 0`` (no iteration has chosen edges yet).
    """

    t: int
    values: tuple
    chosen: tuple | None = None
    previous: tuple | None = None

    @classmethod
    def initial(cls, g: Graph, values: Sequence | None = None) -> "ValueState":
        if values is None:
            zero = g.arith.coerce(0)
            return cls(0, (zero,) * g.n)
        if len(values) != g.n:
            raise ValueError(f"expected {g.n} initial values, got {len(values)}")
        return cls(0, tuple(g.arith.coerce(x) for x in values))


class ValueHistory:
    """Ring buffer of the last ``depth + 1`` value vectors (newest last)."""

    def __init__(self, depth: int):
        self._buf: deque = deque(maxlen=depth + 1)

    def push(self, values: Sequence) -> None:
        self._buf.append(tuple(values))

    def lag(self, j: int):
        """Values ``j`` time points before the newest."""
        if j >= len(self._buf):
            raise IndexError(f"history holds only {len(self._buf) - 1} past vectors")
        return self._buf[-1 - j]

    def __len__(self) -> int:
        return len(self._buf)


def _select(g, u, x, prev_choice):
    """Lazy choice for vertex u given neighbour values x; returns (index, value)."""
    es = g.adj[u]
    if len(es) == 1:
        e = es[0]
        return 0, e.reward + x[e.target]
    vals = [r + x[v] for v, r in es]
    best = max(vals)
    eq = g.arith.eq
    if prev_choice is not None and eq(vals[prev_choice], best):
        return prev_choice, vals[prev_choice]
    for i, val in enumerate(vals):
        if eq(val, best):
            return i, val
    raise AssertionError("unreachable")


def vi_step(g: Graph, s: ValueState) -> ValueState:
    """One synchronous iteration: every vertex reads only ``s.values``."""
    x = s.values
    prev = s.chosen
    new_x = []
    new_c = []
    for u in range(g.n):
        i, val = _select(g, u, x, None if prev is None else prev[u])
        new_x.append(val)
        new_c.append(i)
    return ValueState(s.t + 1, tuple(new_x), tuple(new_c), x)


def gauss_seidel_step(g: Graph, s: ValueState, order: Sequence[int] | None = None) -> ValueState:
    """One in-place sweep over ``order``; each vertex reads the freshest values."""
    order = range(g.n) if order is None else order
    if sorted(order) != list(range(g.n)):
        raise ValueError("order must be a permutation of the vertices")
    x = list(s.values)
    prev = s.chosen
    chosen = [0] * g.n if prev is None else list(prev)
    for u in order:
        i, val = _select(g, u, x, None if prev is None else prev[u])
        x[u] = val
        chosen[u] = i
    return ValueState(s.t + 1, tuple(x), tuple(chosen), s.values)


def value_of_walk(g: Graph, w: Walk, history: ValueHistory | Sequence[Sequence]) -> Number:
    """``R(w) + x_end(t - |w|)`` where the newest entry of ``history`` is ``x(t)``."""
    if isinstance(history, ValueHistory):
        past = history.lag(len(w))
    else:
        if len(history) <= len(w):
            raise IndexError(f"walk of length {len(w)} needs {len(w)} past value vectors")
        past = history[-1 - len(w)]
    return w.total(g) + past[w.end(g)]


def detect_policy_cycles(g: Graph, chosen: Sequence[int]) -> list[CycleReport]:
    """All cycles of the functional graph ``u -> adj[u][chosen[u]]``.

    Each cycle is reported once, rotated to start at its lowest vertex, and the
    list is ordered by that vertex.
    """
    n = g.n
    state = [0] * n          # 0 new, 1 on current path, 2 done
    cycles = []
    for start in range(n):
        if state[start]:
            continue
        path = []
        u = start
        while state[u] == 0:
            state[u] = 1
            path.append(u)
            u = g.adj[u][chosen[u]].target
        if state[u] == 1:
            k = path.index(u)
            loop = path[k:]
            cycles.append(canonical_cycle(g, loop, [chosen[w] for w in loop]))
        for w in path:
            state[w] = 2
    cycles.sort(key=lambda c: c.vertices[0])
    return cycles


def best_cycle(g: Graph, cycles: Sequence[CycleReport]) -> CycleReport | None:
    """Highest-mean cycle; the first one listed wins ties."""
    best = None
    for c in cycles:
        if best is None or g.arith.gt(c.mean, best.mean):
            best = c
    return best


def policy_hash(chosen: Sequence[int]) -> str:
    return hashlib.blake2b(",".join(map(str, chosen)).encode(), digest_size=8).hexdigest()


@dataclass
class TraceRow:
    t: int
    policy_hash: str
    switches: int
    max_value: Number


StopCondition = Callable[[ValueState, list], bool]


@dataclass
class VITrace:
    """Outcome of :func:`run_vi`.

    ``optimal_present[t-1]`` tells whether the policy visited at iteration t
    contains a cycle of the reference mean (only filled when one is given).
    """

    state: ValueState
    first_formation: int | None = None
    stopped: bool = False
    policy_hashes: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    optimal_present: list = field(default_factory=list)

    def write_csv(self, fh: TextIO, arith=None) -> None:
        fmt = arith.format if arith is not None else str
        w = csv.writer(fh)
        w.writerow(["t", "policy_hash", "switches", "max_value"])
        for row in self.rows:
            w.writerow([row.t, row.policy_hash, row.switches, fmt(row.max_value)])


def run_vi(g: Graph, init: Sequence | None = None, max_t: int = 1, mu_star=None,
           stop: StopCondition | None = None, record: bool = True,
           backend: str = "auto") -> VITrace:
    """Iterate :func:`vi_step` up to ``max_t`` times.

    With ``mu_star`` the first iteration whose visited policy contains a cycle
    of that mean is recorded. ``stop(state, cycles)`` is consulted after every
    iteration (policy cycles are computed only when needed). ``backend`` may be
    ``"python"``, ``"numpy"`` (float graphs only) or ``"auto"``.
    """
    if max_t < 1:
        raise ValueError("max_t must be >= 1")
    if _use_numpy(g, backend):
        return _run_vi_numpy(g, init, max_t, mu_star, stop, record)
    state = ValueState.initial(g, init)
    trace = VITrace(state)
    need_cycles = mu_star is not None or stop is not None
    if mu_star is not None:
        mu_star = g.arith.coerce(mu_star)
    for _ in range(max_t):
        prev_choice = state.chosen
        state = vi_step(g, state)
        if record:
            switches = 0 if prev_choice is None else sum(a != b for a, b in zip(prev_choice, state.chosen))
            h = policy_hash(state.chosen)
            trace.policy_hashes.append(h)
            trace.rows.append(TraceRow(state.t, h, switches, max(state.values)))
        if need_cycles:
            cycles = detect_policy_cycles(g, state.chosen)
            if mu_star is not None:
                present = any(g.arith.eq(c.mean, mu_star) for c in cycles)
                trace.optimal_present.append(present)
                if present and trace.first_formation is None:
                    trace.first_formation = state.t
            if stop is not None and stop(state, cycles):
                trace.stopped = True
                break
    trace.state = state
    return trace


def _use_numpy(g: Graph, backend: str) -> bool:
    if backend == "python":
        return False
    if backend == "numpy":
        if g.exact:
            raise ValueError("numpy backend requires a float-mode graph")
        return True
    if backend == "auto":
        return not g.exact
    raise ValueError(f"unknown backend {backend!r}")


def _run_vi_numpy(g, init, max_t, mu_star, stop, record):
    import numpy as np

    from .fast import CSRGraph

    csr = CSRGraph.from_graph(g)
    x = np.zeros(g.n) if init is None else np.asarray(init, dtype=np.float64)
    chosen = None
    trace = VITrace(ValueState.initial(g, None if init is None else list(map(float, init))))
    need_cycles = mu_star is not None or stop is not None
    state = trace.state
    for t in range(1, max_t + 1):
        prev_x = x
        new_x, new_c = csr.step(x, chosen)
        switches = 0 if chosen is None else int(np.count_nonzero(new_c != chosen))
        x, chosen = new_x, new_c
        if record or need_cycles or t == max_t:
            c_list = chosen.tolist()
        if record:
            h = policy_hash(c_list)
            trace.policy_hashes.append(h)
            trace.rows.append(TraceRow(t, h, switches, float(x.max())))
        if need_cycles:
            state = ValueState(t, tuple(x.tolist()), tuple(c_list), tuple(prev_x.tolist())) if stop else None
            cycles = detect_policy_cycles(g, c_list)
            if mu_star is not None:
                present = any(g.arith.eq(c.mean, mu_star) for c in cycles)
                trace.optimal_present.append(present)
                if present and trace.first_formation is None:
                    trace.first_formation = t
            if stop is not None and stop(state, cycles):
                trace.stopped = True
                break
    trace.state = ValueState(t, tuple(x.tolist()), tuple(chosen.tolist()), tuple(prev_x.tolist()))
    return trace


@dataclass
class VIResult:
    mu: Number
    cycle: CycleReport
    found_at: int
    iterations: int


def vi_detect(g: Graph, init: Sequence | None = None, iterations: int | None = None) -> VIResult:
    """Plain value iteration for ``n^2 + n`` iterations, reporting the best
    policy cycle seen. No visited policy can hold a cycle above the optimum and
    an optimal one has formed within that horizon, so the result is exact."""
    n = g.n
    iterations = n * n + n if iterations is None else iterations
    state = ValueState.initial(g, init)
    best = None
    found_at = 0
    for _ in range(iterations):
        state = vi_step(g, state)
        c = best_cycle(g, detect_policy_cycles(g, state.chosen))
        if best is None or g.arith.gt(c.mean, best.mean):
            best, found_at = c, state.t
    return VIResult(best.mean, best, found_at, iterations)


# --------------------------------------------------------------------------
# dominance instrumentation


@dataclass
class DominanceTracker:
    """Per vertex and residue class ``j`` mod ``p``: the best value seen at
    times ``t = j (mod p)`` and the last time it strictly improved."""

    p: int
    n: int
    arith: object
    best: list = field(default_factory=list)
    last: list = field(default_factory=list)

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("period must be >= 1")
        if not self.best:
            self.best = [[None] * self.p for _ in range(self.n)]
            self.last = [[-1] * self.p for _ in range(self.n)]

    def observe(self, t: int, values: Sequence) -> None:
        j = t % self.p
        gt = self.arith.gt
        for v, x in enumerate(values):
            b = self.best[v][j]
            if b is None or gt(x, b):
                self.best[v][j] = x
                self.last[v][j] = t

    def violations(self) -> list[tuple[int, int, int]]:
        """``(vertex, residue, time)`` for improvements after ``p * n``."""
        bound = self.p * self.n
        return [(v, j, l) for v in range(self.n) for j, l in enumerate(self.last[v]) if l > bound]

    def highest(self, v: int) -> Number:
        return max(b for b in self.best[v] if b is not None)


def track_dominance(g: Graph, init: Sequence | None = None, p: int = 1, horizon: int | None = None
                    ) -> DominanceTracker:
    """Run value iteration to ``horizon`` (default ``3pn``) recording residue maxima.

    Meant for mean-zero graphs; shift the rewards first with
    :func:`dmdp.graph.mean_zero_parallel`.
    """
    horizon = 3 * p * g.n if horizon is None else horizon
    if horizon < p * g.n:
        raise ValueError("horizon must be at least p * n")
    tracker = DominanceTracker(p, g.n, g.arith)
    state = ValueState.initial(g, init)
    tracker.observe(0, state.values)
    for _ in range(horizon):
        state = vi_step(g, state)
        tracker.observe(state.t, state.values)
    return tracker


def highest_values_settled(g: Graph, cycles: Sequence[CycleReport], init: Sequence | None = None) -> int:
    """Iteration by which every vertex of every given cycle has obtained its
    highest ``|c|`` values (one per residue class mod ``|c|``).

    ``g`` must be mean-zero and ``cycles`` its optimal cycles. Residue maxima
    are measured over ``3 p n`` iterations for the longest cycle length ``p``,
    which covers the ``p n`` bound on when they are attained.
    """
    lengths = sorted({c.length for c in cycles})
    horizon = 3 * lengths[-1] * g.n
    trackers = {p: DominanceTracker(p, g.n, g.arith) for p in lengths}
    state = ValueState.initial(g, init)
    for tr in trackers.values():
        tr.observe(0, state.values)
    for _ in range(horizon):
        state = vi_step(g, state)
        for tr in trackers.values():
            tr.observe(state.t, state.values)
    return max(max(trackers[c.length].last[v]) for c in cycles for v in c.vertices)
