"""Weighted digraph, walks, cycle reports and the edge-list text format."""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple, Sequence, TextIO

from .scalar import EXACT, Approx, Arith, Number, parse_number


class GraphFormatError(ValueError):
    """Raised for malformed edge-list input."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class Edge(NamedTuple):
    target: int
    reward: Number


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable weighted digraph on vertices ``0..n-1``.

    ``adj[u]`` is the tuple of u's out-edges in input order. Edge order is
    significant: every "first" or "lowest index" tie rule refers to it.
    """

    adj: tuple[tuple[Edge, ...], ...]
    arith: Arith = EXACT

    def __post_init__(self):
        n = len(self.adj)
        if n == 0:
            raise ValueError("graph must have at least one vertex")
        for u, edges in enumerate(self.adj):
            if not edges:
                raise ValueError(f"vertex {u} has no out-edge")
            for e in edges:
                if not 0 <= e.target < n:
                    raise ValueError(f"edge {u}->{e.target} leaves the vertex range [0, {n})")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int, object]], arith: Arith = EXACT) -> "Graph":
        """Build from ``(source, target, reward)`` triples; order per source is kept."""
        adj: list[list[Edge]] = [[] for _ in range(n)]
        for u, v, r in edges:
            if not 0 <= u < n:
                raise ValueError(f"edge source {u} outside [0, {n})")
            adj[u].append(Edge(int(v), arith.coerce(r)))
        return cls(tuple(tuple(es) for es in adj), arith)

    @property
    def n(self) -> int:
        return len(self.adj)

    @cached_property
    def m(self) -> int:
        return sum(len(es) for es in self.adj)

    @property
    def exact(self) -> bool:
        return self.arith.exact

    def edge(self, u: int, i: int) -> Edge:
        return self.adj[u][i]

    def edges(self) -> Iterator[tuple[int, int, int, Number]]:
        """Yield ``(source, edge_index, target, reward)`` in storage order."""
        for u, es in enumerate(self.adj):
            for i, (v, r) in enumerate(es):
                yield u, i, v, r

    def with_rewards(self, fn) -> "Graph":
        return Graph(tuple(tuple(Edge(v, fn(r)) for v, r in es) for es in self.adj), self.arith)

    def to_float(self, eps: float | None = None) -> "Graph":
        arith = Approx() if eps is None else Approx(eps)
        return Graph(tuple(tuple(Edge(v, float(r)) for v, r in es) for es in self.adj), arith)

    def to_exact(self) -> "Graph":
        return Graph(tuple(tuple(Edge(v, Fraction(r)) for v, r in es) for es in self.adj), EXACT)

    def reverse_adjacency(self) -> list[list[tuple[int, int]]]:
        """``radj[v]`` lists ``(u, i)`` for every edge ``adj[u][i]`` entering v."""
        radj: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for u, es in enumerate(self.adj):
            for i, e in enumerate(es):
                radj[e.target].append((u, i))
        return radj

    def induced(self, vertices: Sequence[int]) -> tuple["Graph", list[int], list[list[int]]]:
        """Subgraph on ``vertices`` keeping only internal edges.

        Returns ``(sub, local_to_global, edge_map)`` with
        ``edge_map[local_u][j]`` the original edge index of the sub-edge.
        Raises ``ValueError`` if some vertex keeps no out-edge.
        """
        order = sorted(vertices)
        index = {v: k for k, v in enumerate(order)}
        adj = []
        edge_map = []
        for v in order:
            kept = [(i, e) for i, e in enumerate(self.adj[v]) if e.target in index]
            adj.append(tuple(Edge(index[e.target], e.reward) for _, e in kept))
            edge_map.append([i for i, _ in kept])
        return Graph(tuple(adj), self.arith), order, edge_map

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.adj == other.adj and self.arith == other.arith

    def __hash__(self) -> int:
        return hash(self.adj)

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m}, mode={self.arith.name})"


@dataclass(frozen=True)
class Walk:
    """A walk given as ``(source, edge_index)`` steps."""

    steps: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.steps:
            raise ValueError("a walk has at least one edge")

    @classmethod
    def from_vertices(cls, g: Graph, vertices: Sequence[int]) -> "Walk":
        """Walk through ``vertices`` using the first listed edge for each hop."""
        steps = []
        for u, v in zip(vertices, vertices[1:]):
            for i, e in enumerate(g.adj[u]):
                if e.target == v:
                    steps.append((u, i))
                    break
            else:
                raise ValueError(f"no edge {u}->{v}")
        return cls(tuple(steps))

    def __len__(self) -> int:
        return len(self.steps)

    def check(self, g: Graph) -> None:
        for (u, i), (w, _) in zip(self.steps, self.steps[1:]):
            if g.adj[u][i].target != w:
                raise ValueError(f"walk breaks after edge {u}#{i}")

    @property
    def start(self) -> int:
        return self.steps[0][0]

    def end(self, g: Graph) -> int:
        u, i = self.steps[-1]
        return g.adj[u][i].target

    def total(self, g: Graph) -> Number:
        return sum((g.adj[u][i].reward for u, i in self.steps), g.arith.coerce(0))

    def mean(self, g: Graph) -> Number:
        return self.total(g) / len(self)


@dataclass(frozen=True)
class CycleReport:
    """A simple cycle: ``vertices[k] -> vertices[k+1]`` via ``edges[k]`` (edge indices)."""

    vertices: tuple[int, ...]
    edges: tuple[int, ...]
    total: Number
    mean: Number = field(compare=False)

    @classmethod
    def build(cls, g: Graph, vertices: Sequence[int], edges: Sequence[int]) -> "CycleReport":
        total = sum((g.adj[u][i].reward for u, i in zip(vertices, edges)), g.arith.coerce(0))
        return cls(tuple(vertices), tuple(edges), total, total / len(vertices))

    @property
    def length(self) -> int:
        return len(self.vertices)

    def check(self, g: Graph) -> None:
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("cycle repeats a vertex")
        k = len(self.vertices)
        for pos, (u, i) in enumerate(zip(self.vertices, self.edges)):
            if g.adj[u][i].target != self.vertices[(pos + 1) % k]:
                raise ValueError(f"edge {u}#{i} does not close the cycle")

    def rotated(self, g: Graph, anchor: int) -> "CycleReport":
        k = self.vertices.index(anchor)
        return CycleReport(self.vertices[k:] + self.vertices[:k], self.edges[k:] + self.edges[:k],
                           self.total, self.mean)


def canonical_cycle(g: Graph, vertices: Sequence[int], edges: Sequence[int]) -> CycleReport:
    """Cycle report rotated so that it starts at its lowest vertex."""
    k = min(range(len(vertices)), key=vertices.__getitem__)
    vs = list(vertices[k:]) + list(vertices[:k])
    es = list(edges[k:]) + list(edges[:k])
    return CycleReport.build(g, vs, es)


def split_closed_walk(g: Graph, steps: Sequence[tuple[int, int]]) -> list[CycleReport]:
    """Decompose a closed walk into the simple cycles it traverses."""
    cycles = []
    stack: list[tuple[int, int]] = []
    pos: dict[int, int] = {}
    for u, i in steps:
        if u in pos:
            k = pos[u]
            loop = stack[k:]
            del stack[k:]
            for w, _ in loop:
                del pos[w]
            cycles.append(canonical_cycle(g, [w for w, _ in loop], [j for _, j in loop]))
        pos[u] = len(stack)
        stack.append((u, i))
    if stack:
        cycles.append(canonical_cycle(g, [w for w, _ in stack], [j for _, j in stack]))
    return cycles


# --------------------------------------------------------------------------
# text format


def parse_edge_list(text: str | TextIO, arith: Arith = EXACT, simple: bool = False
                    ) -> tuple[Graph, list[Number]]:
    """Parse the ``p dmdp`` edge-list format.

    Returns the graph and the initial value vector (zero where no ``v``
    line is given). With ``simple=True`` parallel edges are rejected.
    """
    if isinstance(text, str):
        text = io.StringIO(text)
    n = m = None
    adj: list[list[Edge]] = []
    values: dict[int, Number] = {}
    seen: set[tuple[int, int]] = set()
    count = 0
    for lineno, raw in enumerate(text, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if n is None:
            if kind != "p":
                raise GraphFormatError("expected 'p dmdp <n> <m>' header first", lineno)
        if kind == "p":
            if n is not None:
                raise GraphFormatError("duplicate header", lineno)
            if len(parts) != 4 or parts[1] != "dmdp":
                raise GraphFormatError("malformed header", lineno)
            n, m = _int(parts[2], lineno), _int(parts[3], lineno)
            if n < 1 or m < 0:
                raise GraphFormatError("header needs n >= 1 and m >= 0", lineno)
            adj = [[] for _ in range(n)]
        elif kind == "e":
            if len(parts) != 4:
                raise GraphFormatError("edge line needs 'e <from> <to> <reward>'", lineno)
            u, v = _vertex(parts[1], n, lineno), _vertex(parts[2], n, lineno)
            if simple and (u, v) in seen:
                raise GraphFormatError(f"parallel edge {u}->{v}", lineno)
            seen.add((u, v))
            adj[u].append(Edge(v, _reward(parts[3], arith, lineno)))
            count += 1
        elif kind == "v":
            if len(parts) != 3:
                raise GraphFormatError("value line needs 'v <id> <value>'", lineno)
            values[_vertex(parts[1], n, lineno)] = _reward(parts[2], arith, lineno)
        else:
            raise GraphFormatError(f"unknown line type {kind!r}", lineno)
    if n is None:
        raise GraphFormatError("missing header")
    if count != m:
        raise GraphFormatError(f"header announces {m} edges, found {count}")
    for u, es in enumerate(adj):
        if not es:
            raise GraphFormatError(f"vertex {u} has no out-edge")
    g = Graph(tuple(tuple(es) for es in adj), arith)
    zero = arith.coerce(0)
    return g, [values.get(v, zero) for v in range(n)]


def serialize_edge_list(g: Graph, values: Sequence[Number] | None = None, comment: str | None = None) -> str:
    """Render ``g`` (and optional initial values) in the edge-list format."""
    fmt = g.arith.format
    out = []
    if comment:
        out.extend(f"# {line}" for line in comment.splitlines())
    out.append(f"p dmdp {g.n} {g.m}")
    if values is not None:
        out.extend(f"v {v} {fmt(x)}" for v, x in enumerate(values))
    out.extend(f"e {u} {v} {fmt(r)}" for u, _, v, r in g.edges())
    return "\n".join(out) + "\n"


def _int(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise GraphFormatError(f"not an integer: {token!r}", lineno) from None


def _vertex(token: str, n: int, lineno: int) -> int:
    v = _int(token, lineno)
    if not 0 <= v < n:
        raise GraphFormatError(f"vertex id {v} outside [0, {n})", lineno)
    return v


def _reward(token: str, arith: Arith, lineno: int) -> Number:
    try:
        return arith.coerce(parse_number(token))
    except ValueError as exc:
        raise GraphFormatError(str(exc), lineno) from None


# --------------------------------------------------------------------------
# structure


def mean_zero_parallel(g: Graph, mu) -> Graph:
    """Parallel graph with every reward reduced by ``mu``."""
    mu = g.arith.coerce(mu)
    if mu == 0:
        return g
    return g.with_rewards(lambda r: r - mu)


def scc_decompose(g: Graph) -> list[list[int]]:
    """Strongly connected components in reverse topological order (Tarjan).

    Sinks come first; each component's vertices are sorted.
    """
    n = g.n
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] >= 0:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            es = g.adj[v]
            if i < len(es):
                work[-1] = (v, i + 1)
                w = es[i].target
                if index[w] < 0:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    return comps


def has_cycle(g: Graph, component: Sequence[int]) -> bool:
    """True if the strongly connected ``component`` contains a cycle."""
    if len(component) > 1:
        return True
    v = component[0]
    return any(e.target == v for e in g.adj[v])


def reachable_from(g: Graph, source: int) -> set[int]:
    seen = {source}
    todo = [source]
    while todo:
        u = todo.pop()
        for e in g.adj[u]:
            if e.target not in seen:
                seen.add(e.target)
                todo.append(e.target)
    return seen
