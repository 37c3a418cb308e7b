"""Augmented value iteration and phased policy iteration.

All solvers here work in phases. A phase starts from the mean of the most
recently discovered cycle, adjusts rewards/values/edge choices, then value
iterates for at most ``n`` iterations looking for a cycle of strictly higher
mean. The run ends after a phase that finds none.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence, TextIO

from .graph import CycleReport, Edge, Graph, has_cycle, scc_decompose
from .scalar import Number
from .value_iteration import ValueState, best_cycle, detect_policy_cycles, vi_step


@dataclass
class PhaseRecord:
    """One phase: the cycle it found (``None`` for the final, fruitless phase),
    that cycle's mean under the original rewards, and the VI iterations spent."""

    phase: int
    cycle: CycleReport | None
    mean: Number | None
    iterations: int
    monotone: bool = True
    component: int = 0


@dataclass
class PhasedResult:
    mu: Number
    cycle: CycleReport
    policy: tuple
    phases: list = field(default_factory=list)
    iterations: int = 0

    def write_phase_log(self, fh: TextIO, arith=None) -> None:
        fmt = arith.format if arith is not None else str
        w = csv.writer(fh)
        w.writerow(["component", "phase", "cycle_mean", "cycle_length", "vi_iterations"])
        for p in self.phases:
            w.writerow([p.component, p.phase,
                        "" if p.mean is None else fmt(p.mean),
                        "" if p.cycle is None else p.cycle.length,
                        p.iterations])

    def means(self, component: int | None = None) -> list:
        return [p.mean for p in self.phases
                if p.mean is not None and (component is None or p.component == component)]


def _original_mean(g: Graph, c: CycleReport) -> Number:
    total = sum((g.adj[u][i].reward for u, i in zip(c.vertices, c.edges)), g.arith.coerce(0))
    return total / c.length


def _with_self_arcs(g: Graph, offset, arc_reward) -> Graph:
    """``g`` with rewards reduced by ``offset`` and a self-arc appended to every vertex."""
    adj = tuple(tuple(Edge(v, r - offset) for v, r in es) + (Edge(u, arc_reward),)
                for u, es in enumerate(g.adj))
    return Graph(adj, g.arith)


def _is_self_arc(g: Graph, c: CycleReport) -> bool:
    u = c.vertices[0]
    return c.length == 1 and c.edges[0] == len(g.adj[u])


def augmented_vi(g: Graph, init: Sequence | None = None, formulation: str = "subtract",
                 record_choices: bool = False) -> PhasedResult:
    """Value iteration that, whenever its policy holds a cycle better than the
    best mean ``mu`` so far, gives every vertex a self-arc worth ``mu``.

    ``formulation="self-arc"`` literally adds self-arcs of reward ``mu``;
    ``"subtract"`` lowers every reward by ``mu`` and uses zero-reward self-arcs.
    Both visit the same edge choices. Values are never reset. Stops after ``n``
    iterations without improvement.
    """
    if formulation not in ("subtract", "self-arc"):
        raise ValueError(f"unknown formulation {formulation!r}")
    arith = g.arith
    n = g.n
    work = g
    state = ValueState.initial(g, init)
    mu = None
    best = None
    phases: list[PhaseRecord] = []
    since = 0
    total = 0
    choices = []
    while True:
        state = vi_step(work, state)
        total += 1
        since += 1
        if record_choices:
            choices.append(state.chosen)
        found = None
        for c in detect_policy_cycles(work, state.chosen):
            if work is not g and _is_self_arc(g, c):
                continue
            mean = _original_mean(g, c)
            if (mu is None or arith.gt(mean, mu)) and (found is None or arith.gt(mean, found[0])):
                found = (mean, c)
        if found is not None:
            mu, best = found
            phases.append(PhaseRecord(len(phases) + 1, best, mu, since))
            since = 0
            if formulation == "self-arc":
                work = _with_self_arcs(g, arith.coerce(0), mu)
            else:
                work = _with_self_arcs(g, mu, arith.coerce(0))
        elif since >= n:
            phases.append(PhaseRecord(len(phases) + 1, None, None, since))
            break
    result = PhasedResult(mu, best, state.chosen, phases, total)
    if record_choices:
        result.choices = choices
    return result


def redirect_to_cycle(g: Graph, cycle: CycleReport, anchor: int | None = None
                      ) -> tuple[list[int], list[Number]]:
    """Policy in which every vertex has a path to ``cycle`` (its only cycle),
    and the total reward of each vertex's policy path to ``anchor``.

    Paths come from a layered reverse breadth-first search: a vertex joins the
    first layer it can reach, through its lowest-index edge into the vertices
    already placed. ``anchor`` defaults to the cycle's lowest vertex and gets 0.
    """
    n = g.n
    policy = [-1] * n
    order: list[int] = []
    for u, i in zip(cycle.vertices, cycle.edges):
        policy[u] = i
    frontier = set(cycle.vertices)
    placed = set(cycle.vertices)
    radj = g.reverse_adjacency()
    while frontier:
        cands = sorted({u for v in frontier for u, _ in radj[v] if u not in placed})
        layer = []
        for u in cands:
            for i, e in enumerate(g.adj[u]):
                if e.target in placed:
                    policy[u] = i
                    layer.append(u)
                    break
        placed.update(layer)
        order.extend(layer)
        frontier = set(layer)
    missing = [v for v in range(n) if policy[v] < 0]
    if missing:
        raise ValueError(f"vertices {missing[:10]} cannot reach the cycle")

    anchor = cycle.vertices[0] if anchor is None else anchor
    if anchor not in cycle.vertices:
        raise ValueError("anchor must lie on the cycle")
    values: list = [None] * n
    values[anchor] = g.arith.coerce(0)
    k = cycle.vertices.index(anchor)
    ring = cycle.vertices[k:] + cycle.vertices[:k]
    for u in reversed(ring[1:]):
        e = g.adj[u][policy[u]]
        values[u] = e.reward + values[e.target]
    for u in order:
        e = g.adj[u][policy[u]]
        values[u] = e.reward + values[e.target]
    return policy, values


def _pi_component(g: Graph, variant: str) -> tuple[Number, CycleReport, list, list[PhaseRecord], int]:
    """Phased policy iteration on a strongly connected graph."""
    arith = g.arith
    n = g.n
    zero = arith.coerce(0)
    policy = [0] * n
    c = best_cycle(g, detect_policy_cycles(g, policy))
    mu = c.mean
    phases = [PhaseRecord(1, c, mu, 0)]
    total = 0
    while True:
        shifted = g.with_rewards(lambda r: r - mu)
        policy, values = redirect_to_cycle(shifted, c)
        if variant == "zero-reset":
            work = _with_self_arcs(g, mu, zero)
            values = [zero] * n
        else:
            work = shifted
        state = ValueState(0, tuple(values), tuple(policy))
        found = None
        monotone = True
        used = 0
        for _ in range(n):
            prev = state.values
            state = vi_step(work, state)
            used += 1
            if monotone and any(arith.lt(a, b) for a, b in zip(state.values, prev)):
                monotone = False
            for cand in detect_policy_cycles(work, state.chosen):
                if _is_self_arc(g, cand):
                    continue
                adj_mean = _original_mean(g, cand) - mu
                if arith.gt(adj_mean, zero) and (found is None or arith.gt(adj_mean, found[0])):
                    found = (adj_mean, cand)
            if found is not None:
                break
        total += used
        if found is None:
            phases.append(PhaseRecord(len(phases) + 1, None, None, used, monotone))
            return mu, c, policy, phases, total
        c = CycleReport.build(g, found[1].vertices, found[1].edges)
        mu = c.mean
        phases.append(PhaseRecord(len(phases) + 1, c, mu, used, monotone))


def phased_policy_iteration(g: Graph, variant: str = "classic") -> PhasedResult:
    """Phased policy iteration, ``variant`` in ``{"classic", "zero-reset"}``.

    Each phase subtracts the newest cycle mean from the rewards, points every
    vertex along a path to that cycle and re-assigns values: path totals to an
    anchor on the cycle (classic) or all zeros with zero-reward self-arcs
    (zero-reset). Graphs that are not strongly connected are solved per
    component; the answer is the best component mean and in the returned
    policy every vertex heads for the best component cycle it can reach.
    """
    if variant not in ("classic", "zero-reset"):
        raise ValueError(f"unknown variant {variant!r}")
    solved = []
    phases: list[PhaseRecord] = []
    total = 0
    for k, comp in enumerate(sorted(scc_decompose(g))):
        if not has_cycle(g, comp):
            continue
        sub, names, edge_map = g.induced(comp)
        mu, c, _, ph, it = _pi_component(sub, variant)
        total += it
        for p in ph:
            p.component = k
            if p.cycle is not None:
                p.cycle = _lift(g, p.cycle, names, edge_map)
        phases.extend(ph)
        solved.append((mu, _lift(g, c, names, edge_map)))
    best_mu, best_c = solved[0]
    for mu, c in solved[1:]:
        if g.arith.gt(mu, best_mu):
            best_mu, best_c = mu, c
    policy = _combine_policies(g, solved)
    return PhasedResult(best_mu, best_c, tuple(policy), phases, total)


def _lift(g: Graph, c: CycleReport, names: list[int], edge_map: list[list[int]]) -> CycleReport:
    vs = [names[u] for u in c.vertices]
    es = [edge_map[u][i] for u, i in zip(c.vertices, c.edges)]
    k = min(range(len(vs)), key=vs.__getitem__)
    return CycleReport.build(g, vs[k:] + vs[:k], es[k:] + es[:k])


def _combine_policies(g: Graph, solved: list) -> list[int]:
    ranked = sorted(range(len(solved)), key=lambda k: solved[k][1].vertices[0])
    best_first = []
    for k in ranked:
        pos = 0
        while pos < len(best_first) and not g.arith.gt(solved[k][0], solved[best_first[pos]][0]):
            pos += 1
        best_first.insert(pos, k)
    radj = g.reverse_adjacency()
    policy = [-1] * g.n
    for k in best_first:
        c = solved[k][1]
        if any(policy[v] >= 0 for v in c.vertices):
            continue
        for u, i in zip(c.vertices, c.edges):
            policy[u] = i
        frontier = list(c.vertices)
        while frontier:
            picks = []
            for u in sorted({u for v in frontier for u, _ in radj[v] if policy[u] < 0}):
                i = next(i for i, e in enumerate(g.adj[u]) if policy[e.target] >= 0)
                picks.append((u, i))
            for u, i in picks:
                policy[u] = i
            frontier = [u for u, _ in picks]
    return policy
