"""Periodic-test solvers and the random-graph convergence study.

``find_in_policy`` and ``find_in_history`` run value iteration, and after a
warm-up of ``ceil(log2 n)`` iterations periodically take a candidate mean
(best policy cycle, or best cyclic super edge) and accept it only when the
Bellman-Ford test finds no cycle above it. No unverified answer is returned.
"""
from __future__ import annotations

import csv
import math
import statistics
import time
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Sequence, TextIO

from .baselines import bf_positive_cycle
from .generators import derive_seed, gen_two_out_random
from .graph import CycleReport, Graph
from .history_walk import SuperEdgeTracker, run_history_walk
from .scalar import Approx, Arith, Number
from .value_iteration import ValueState, _use_numpy, best_cycle, detect_policy_cycles, run_vi, vi_step

CSV_VERSION = "dmdp-experiment v1"


def log2_ceil(n: int) -> int:
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


@dataclass
class DetectResult:
    mu: Number
    iterations: int
    checks: int
    cycle: CycleReport | None = None
    length: int | None = None


def _schedule(n, warmup, period):
    warmup = log2_ceil(n) if warmup is None else warmup
    period = log2_ceil(n) if period is None else period
    if warmup < 1 or period < 1:
        raise ValueError("warm-up and period must be >= 1")
    return warmup, period


def find_in_policy(g: Graph, warmup: int | None = None, period: int | None = None,
                   max_iters: int | None = None, backend: str = "auto") -> DetectResult:
    """Value iteration with a periodic check of the visited policy's best cycle."""
    n = g.n
    warmup, period = _schedule(n, warmup, period)
    cap = n * n + 2 * n + warmup + period if max_iters is None else max_iters
    checks = 0
    refuted = None
    if _use_numpy(g, backend):
        import numpy as np

        from .fast import CSRGraph

        csr = CSRGraph.from_graph(g)
        x = np.zeros(n)
        chosen = None

        def advance():
            nonlocal x, chosen
            x, chosen = csr.step(x, chosen)
            return chosen.tolist()
    else:
        state = ValueState.initial(g)

        def advance():
            nonlocal state
            state = vi_step(g, state)
            return state.chosen

    for t in range(1, cap + 1):
        policy = advance()
        if t < warmup or (t - warmup) % period:
            continue
        c = best_cycle(g, detect_policy_cycles(g, policy))
        if refuted is not None and not g.arith.gt(c.mean, refuted):
            continue   # no better than a mean already shown to be too low
        checks += 1
        if not bf_positive_cycle(g, c.mean):
            return DetectResult(c.mean, t, checks, c, c.length)
        refuted = c.mean
    raise RuntimeError(f"no verified optimum within {cap} iterations")


def find_in_history(g: Graph, warmup: int | None = None, period: int | None = None,
                    backend: str = "auto") -> DetectResult:
    """Value iteration with super-edge tracking after the warm-up.

    If tracking started before iteration ``n`` and nothing verified by then,
    the super edges are cleared at ``n`` so that the ``n`` iterations that
    follow are a full history-walk second phase; a check is forced at its end,
    where verification is guaranteed to pass.
    """
    n = g.n
    warmup, period = _schedule(n, warmup, period)
    if _use_numpy(g, backend):
        return _find_in_history_numpy(g, warmup, period)
    state = ValueState.initial(g)
    for _ in range(warmup):
        state = vi_step(g, state)
    tracker = SuperEdgeTracker(g, state.values)
    checks = 0
    restart = warmup < n
    deadline = max(n, warmup) + n
    t = warmup
    while True:
        t += 1
        tracker.step(t)
        due = (t - warmup) % period == 0 or t == deadline
        if due and tracker.best is not None:
            checks += 1
            best = tracker.best.edge
            if not bf_positive_cycle(g, best.mean):
                return DetectResult(best.mean, t, checks, None, best.length)
        if restart and t == n:
            tracker.supers = [None] * n
            restart = False
        if t >= deadline:
            raise RuntimeError("history tracking failed to verify an optimum")


def _find_in_history_numpy(g, warmup, period):
    import numpy as np

    from .fast import CSRGraph

    n = g.n
    csr = CSRGraph.from_graph(g)
    x = np.zeros(n)
    chosen = None
    for _ in range(warmup):
        x, chosen = csr.step(x, chosen)
    se_end = np.full(n, -1, dtype=np.int64)
    se_len = np.zeros(n, dtype=np.int64)
    se_tot = np.zeros(n)
    best = None
    gt = g.arith.gt
    checks = 0
    restart = warmup < n
    deadline = max(n, warmup) + n
    t = warmup
    while True:
        t += 1
        x, chosen, se_end, se_len, se_tot, (idx, lengths, totals) = csr.history_step(x, se_end, se_len, se_tot)
        for l, tot in zip(lengths.tolist(), totals.tolist()):
            mean = tot / l
            if best is None or gt(mean, best[0]):
                best = (mean, l)
        due = (t - warmup) % period == 0 or t == deadline
        if due and best is not None:
            checks += 1
            if not bf_positive_cycle(g, best[0]):
                return DetectResult(best[0], t, checks, None, best[1])
        if restart and t == n:
            se_end = np.full(n, -1, dtype=np.int64)
            restart = False
        if t >= deadline:
            raise RuntimeError("history tracking failed to verify an optimum")


# --------------------------------------------------------------------------
# convergence study


@dataclass
class ExperimentRow:
    n: int
    seed: int
    mu_star: Number
    cycle_length: int
    first_formation: int
    detect_iterations: int
    wall_ns: int
    algorithm: str


DETECTORS = {"find-in-policy": find_in_policy, "find-in-history": find_in_history}


def first_formation(g: Graph, mu_star, backend: str = "auto", max_t: int | None = None
                    ) -> tuple[int, CycleReport]:
    """First iteration (from zero values) whose policy holds a cycle of mean ``mu_star``."""
    eq = g.arith.eq
    hit: list[CycleReport] = []

    def stop(_state, cycles):
        for c in cycles:
            if eq(c.mean, mu_star):
                hit.append(c)
                return True
        return False

    cap = g.n * g.n + 2 * g.n if max_t is None else max_t
    trace = run_vi(g, None, cap, stop=stop, record=False, backend=backend)
    if not hit:
        raise RuntimeError(f"optimal cycle did not form within {cap} iterations")
    return trace.state.t, hit[0]


def _timed(fn, g, repeats, backend):
    times = []
    result = None
    for _ in range(repeats):
        start = time.perf_counter_ns()
        result = fn(g, backend=backend)
        times.append(time.perf_counter_ns() - start)
    return result, int(statistics.median(times))


def study_instance(n: int, seed: int, arith: Arith, algorithm: str = "find-in-policy",
                   timing: bool = True, repeats: int = 3, backend: str = "auto") -> ExperimentRow:
    """One two-out instance: optimum via history-walk (checked by Bellman-Ford),
    first formation under plain value iteration, and the detector's cost."""
    g = gen_two_out_random(n, seed, arith)
    hw = run_history_walk(g, backend=backend)
    mu = hw.mu
    if bf_positive_cycle(g, mu):
        raise AssertionError(f"history-walk mean {mu} failed verification (n={n}, seed={seed})")
    t_first, cycle = first_formation(g, mu, backend)
    detector = DETECTORS[algorithm]
    if timing:
        det, wall = _timed(detector, g, repeats, backend)
    else:
        det, wall = detector(g, backend=backend), 0
    if not g.arith.eq(det.mu, mu):
        raise AssertionError(f"{algorithm} returned {det.mu}, history-walk {mu} (n={n}, seed={seed})")
    return ExperimentRow(n, seed, mu, cycle.length, t_first, det.iterations, wall, algorithm)


def run_convergence_study(sizes: Sequence[int], samples: int, seed: int, arith: Arith | None = None,
                          algorithm: str = "find-in-policy", timing: bool = True, repeats: int = 3,
                          backend: str = "auto", progress=None) -> list[ExperimentRow]:
    """Rows for ``samples`` two-out graphs at each size, ordered by (n, sample)."""
    if list(sizes) != sorted(sizes):
        raise ValueError("sizes must be ascending")
    arith = Approx() if arith is None else arith
    rows = []
    for n in sizes:
        for i in range(samples):
            s = derive_seed("study", seed, n, i)
            rows.append(study_instance(n, s, arith, algorithm, timing, repeats, backend))
            if progress is not None:
                progress(rows[-1])
    return rows


@dataclass
class SizeSummary:
    n: int
    samples: int
    cycle_length_mean: float
    cycle_length_std: float
    first_formation_mean: float
    first_formation_std: float
    detect_iterations_mean: float
    wall_ns_mean: float


def summarize(rows: Iterable[ExperimentRow]) -> list[SizeSummary]:
    by_n: dict[int, list[ExperimentRow]] = {}
    for r in rows:
        by_n.setdefault(r.n, []).append(r)
    out = []
    for n in sorted(by_n):
        rs = by_n[n]
        lengths = [r.cycle_length for r in rs]
        firsts = [r.first_formation for r in rs]
        out.append(SizeSummary(
            n, len(rs),
            statistics.fmean(lengths), statistics.pstdev(lengths),
            statistics.fmean(firsts), statistics.pstdev(firsts),
            statistics.fmean(r.detect_iterations for r in rs),
            statistics.fmean(r.wall_ns for r in rs),
        ))
    return out


def power_law_exponent(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log(y) against log(x)."""
    lx = [math.log(x) for x in xs]
    ly = [math.log(y) for y in ys]
    mx, my = statistics.fmean(lx), statistics.fmean(ly)
    num = sum((a - mx) * (b - my) for a, b in zip(lx, ly))
    den = sum((a - mx) ** 2 for a in lx)
    return num / den


def write_rows_csv(rows: Iterable[ExperimentRow], fh: TextIO, arith: Arith | None = None) -> None:
    fmt = arith.format if arith is not None else str
    fh.write(f"# {CSV_VERSION}\n")
    w = csv.writer(fh, lineterminator="\n")
    names = [f.name for f in fields(ExperimentRow)]
    w.writerow(names)
    for r in rows:
        d = asdict(r)
        d["mu_star"] = fmt(r.mu_star)
        w.writerow([d[k] for k in names])


def write_summary_csv(summary: Iterable[SizeSummary], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    names = [f.name for f in fields(SizeSummary)]
    w.writerow(names)
    for s in summary:
        d = asdict(s)
        w.writerow([d[k] for k in names])
