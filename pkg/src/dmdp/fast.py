"""Vectorised float-mode kernels.

These mirror the pure-Python steps in :mod:`dmdp.value_iteration` and
:mod:`dmdp.history_walk` operation for operation (same IEEE additions, same
tolerance test, same tie rules), so both backends visit identical policies on
float graphs. They exist for the large random-graph experiments; exact-mode
work always runs the Python reference.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph


@dataclass(frozen=True)
class CSRGraph:
    n: int
    starts: np.ndarray     # first edge of each vertex, shape (n,)
    src: np.ndarray        # source of each edge, shape (m,)
    targets: np.ndarray    # shape (m,)
    rewards: np.ndarray    # float64, shape (m,)
    local: np.ndarray      # index of each edge within its source's list
    max_degree: int
    eps: float
    uniform: bool = False  # every vertex has max_degree edges

    @classmethod
    def from_graph(cls, g: Graph) -> "CSRGraph":
        if g.exact:
            raise ValueError("vectorised kernels need a float-mode graph")
        degree = np.fromiter((len(es) for es in g.adj), dtype=np.int64, count=g.n)
        starts = np.zeros(g.n, dtype=np.int64)
        np.cumsum(degree[:-1], out=starts[1:])
        src = np.repeat(np.arange(g.n, dtype=np.int64), degree)
        targets = np.fromiter((e.target for es in g.adj for e in es), dtype=np.int64, count=g.m)
        rewards = np.fromiter((e.reward for es in g.adj for e in es), dtype=np.float64, count=g.m)
        local = np.arange(g.m, dtype=np.int64) - starts[src]
        d = int(degree.max())
        return cls(g.n, starts, src, targets, rewards, local, d, g.arith.eps, bool((degree == d).all()))

    def _segmax(self, a: np.ndarray) -> np.ndarray:
        if self.uniform:
            return a.reshape(self.n, self.max_degree).max(axis=1)
        return np.maximum.reduceat(a, self.starts)

    def _segmin(self, a: np.ndarray) -> np.ndarray:
        if self.uniform:
            return a.reshape(self.n, self.max_degree).min(axis=1)
        return np.minimum.reduceat(a, self.starts)

    def successors(self, chosen: np.ndarray) -> np.ndarray:
        return self.targets[self.starts + chosen]

    def _tied(self, vals: np.ndarray, best: np.ndarray) -> np.ndarray:
        b = best[self.src]
        scale = np.maximum(1.0, np.maximum(np.abs(vals), np.abs(b)))
        return np.abs(vals - b) <= self.eps * scale

    def step(self, x: np.ndarray, chosen: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
        """Synchronous update with the lazy tie rule (lowest index otherwise)."""
        vals = self.rewards + x[self.targets]
        best = self._segmax(vals)
        tied = self._tied(vals, best)
        first = self._segmin(np.where(tied, self.local, self.max_degree))
        if chosen is not None:
            keep = tied[self.starts + chosen]
            first = np.where(keep, chosen, first)
        return vals[self.starts + first], first

    def history_step(self, x: np.ndarray, se_end: np.ndarray, se_len: np.ndarray, se_tot: np.ndarray):
        """One iteration with super-edge tracking under the lowest-index rule.

        ``se_end[v] == -1`` marks an undefined super edge. Returns the new
        values, choices and super-edge arrays plus ``(vertices, lengths,
        totals)`` of the cyclic super edges closed this iteration.
        """
        vals = self.rewards + x[self.targets]
        best = self._segmax(vals)
        tied = self._tied(vals, best)
        end_t = se_end[self.targets]
        key = np.where(end_t >= 0, end_t, self.targets)
        big = (self.n + 1) * (self.max_degree + 1)
        packed = np.where(tied, key * (self.max_degree + 1) + self.local, big)
        first = self._segmin(packed) % (self.max_degree + 1)
        edge = self.starts + first
        new_x = vals[edge]
        v = self.targets[edge]
        r = self.rewards[edge]
        u = np.arange(self.n)
        z = se_end[v]
        defined = z >= 0
        self_loop = v == u
        closes = defined & (z == u) & ~self_loop
        extend = defined & ~closes & ~self_loop
        fresh = ~defined & ~self_loop
        new_end = np.full(self.n, -1, dtype=np.int64)
        new_len = np.zeros(self.n, dtype=np.int64)
        new_tot = np.zeros(self.n, dtype=np.float64)
        new_end[fresh] = v[fresh]
        new_len[fresh] = 1
        new_tot[fresh] = r[fresh]
        new_end[extend] = z[extend]
        new_len[extend] = se_len[v][extend] + 1
        new_tot[extend] = r[extend] + se_tot[v][extend]
        cyc = self_loop | closes
        idx = np.flatnonzero(cyc)
        lengths = np.where(self_loop, 1, se_len[v] + 1)[idx]
        totals = np.where(self_loop, r, r + se_tot[v])[idx]
        return new_x, first, new_end, new_len, new_tot, (idx, lengths, totals)
