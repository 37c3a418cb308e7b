"""Command-line front-end: ``solve``, ``gen``, ``bench`` and ``verify``."""
from __future__ import annotations

import argparse
import sys
import time
from typing import Sequence

from .baselines import ORACLE_MAX_N, bf_positive_cycle, karp_mean, oracle_enumerate
from .experiments import (find_in_history, find_in_policy, run_convergence_study, summarize,
                          write_rows_csv, write_summary_csv)
from .generators import gen_two_out_random, gen_worst_case, integer_rewards, uniform_unit
from .graph import CycleReport, Graph, GraphFormatError, parse_edge_list, serialize_edge_list
from .history_walk import run_history_walk
from .phased import augmented_vi, phased_policy_iteration
from .scalar import EXACT, arith_for, decimal, parse_number
from .value_iteration import vi_detect

ALGORITHMS = ("vi", "history", "augmented", "pi-classic", "pi-zero", "karp", "oracle",
              "find-in-policy", "find-in-history")


class Solution:
    def __init__(self, mu, cycle: CycleReport | None = None, iterations: int | None = None, note: str = ""):
        self.mu = mu
        self.cycle = cycle
        self.iterations = iterations
        self.note = note


def _solve_one(g: Graph, algo: str, init, max_iters: int | None) -> Solution:
    if algo == "vi":
        r = vi_detect(g, init, max_iters)
        return Solution(r.mu, r.cycle, r.iterations, f"first seen at iteration {r.found_at}")
    if algo == "history":
        r = run_history_walk(g, init, debug=g.exact)
        return Solution(r.mu, r.witness, r.iterations,
                        f"closed walk of length {r.length} at vertex {r.discovered_by}, iteration {r.discovered_at}")
    if algo == "augmented":
        r = augmented_vi(g, init)
        return Solution(r.mu, r.cycle, r.iterations, f"{len(r.phases)} phases")
    if algo in ("pi-classic", "pi-zero"):
        r = phased_policy_iteration(g, "classic" if algo == "pi-classic" else "zero-reset")
        return Solution(r.mu, r.cycle, r.iterations, f"{len(r.phases)} phases")
    if algo == "karp":
        return Solution(karp_mean(g))
    if algo == "oracle":
        r = oracle_enumerate(g)
        return Solution(r.mu, r.cycle, None, f"{r.cycles_examined} simple cycles")
    if algo == "find-in-policy":
        r = find_in_policy(g, max_iters=max_iters)
        return Solution(r.mu, r.cycle, r.iterations, f"{r.checks} checks")
    if algo == "find-in-history":
        r = find_in_history(g)
        return Solution(r.mu, None, r.iterations, f"{r.checks} checks, closed walk length {r.length}")
    raise ValueError(f"unknown algorithm {algo!r}")


def _format_cycle(g: Graph, c: CycleReport) -> str:
    path = " -> ".join(str(v) for v in list(c.vertices) + [c.vertices[0]])
    return f"{path} (length {c.length}, total {g.arith.format(c.total)})"


def _load(path: str, arith):
    with open(path) as fh:
        return parse_edge_list(fh, arith)


def cmd_solve(args, out) -> int:
    arith = arith_for("exact" if args.exact else "float" if args.float else None)
    g, init = _load(args.input, arith)
    start = time.perf_counter_ns()
    sol = _solve_one(g, args.algo, init, args.max_iters)
    wall = time.perf_counter_ns() - start
    fmt = arith.format
    print(f"mu* = {fmt(sol.mu)}", file=out)
    print(f"decimal = {decimal(sol.mu)}", file=out)
    if sol.cycle is not None:
        print(f"witness = {_format_cycle(g, sol.cycle)}", file=out)
    if sol.iterations is not None:
        print(f"iterations = {sol.iterations}", file=out)
    if sol.note:
        print(f"info = {sol.note}", file=out)
    print(f"wall = {wall / 1e6:.3f} ms", file=out)
    if not args.cross_check:
        return 0
    others = [a for a in ALGORITHMS if a != args.algo and (a != "oracle" or g.n <= ORACLE_MAX_N)]
    bad = 0
    for algo in others:
        mu = _solve_one(g, algo, init, None).mu
        ok = arith.eq(mu, sol.mu)
        bad += not ok
        print(f"cross-check {algo}: {fmt(mu)} {'ok' if ok else 'DISAGREES'}", file=out)
    if bad:
        print(f"error: {bad} solver(s) disagree", file=sys.stderr)
        return 3
    return 0


def cmd_gen(args, out) -> int:
    if args.model == "two-out":
        if args.n is None:
            raise SystemExit("gen: --n is required for the two-out model")
        if args.integer:
            g = gen_two_out_random(args.n, args.seed, EXACT, integer_rewards())
            text = serialize_edge_list(g, comment=f"two-out n={args.n} seed={args.seed} integer rewards")
        else:
            g = gen_two_out_random(args.n, args.seed, arith_for("float"), uniform_unit)
            text = serialize_edge_list(g, comment=f"two-out n={args.n} seed={args.seed}")
    else:
        k = args.k if args.k is not None else args.n
        if k is None:
            raise SystemExit("gen: --k (or --n) is required for the worst-case model")
        g, values = gen_worst_case(k)
        text = serialize_edge_list(g, values, comment=f"worst-case k={k}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    return 0


def cmd_bench(args, out) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    arith = arith_for("exact" if args.exact else "float")
    rows = run_convergence_study(sizes, args.samples, args.seed, arith, algorithm=args.algo,
                                 timing=not args.no_timing, repeats=args.repeats)
    with open(args.out, "w") as fh:
        write_rows_csv(rows, fh, arith)
    summary = summarize(rows)
    if args.summary:
        with open(args.summary, "w") as fh:
            write_summary_csv(summary, fh)
    for s in summary:
        print(f"n={s.n} samples={s.samples} cycle_length={s.cycle_length_mean:.3f} "
              f"first_formation={s.first_formation_mean:.3f}", file=out)
    return 0


def cmd_verify(args, out) -> int:
    arith = arith_for("exact" if args.exact else "float" if args.float else None)
    g, _ = _load(args.input, arith)
    mu = arith.coerce(parse_number(args.mu))
    if bf_positive_cycle(g, mu):
        print("positive cycle exists: candidate below optimum", file=out)
    else:
        print("no positive cycle: candidate is at least the optimum", file=out)
    return 0


def _mode_flags(p):
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--exact", action="store_true", help="exact rational arithmetic")
    grp.add_argument("--float", action="store_true", help="floating point with relative tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dmdp", description="Maximum mean cycle solvers for deterministic MDPs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an edge-list instance")
    p.add_argument("--algo", choices=ALGORITHMS, required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--cross-check", action="store_true", help="run every solver and compare")
    p.add_argument("--max-iters", type=int, default=None)
    _mode_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen", help="generate an instance")
    p.add_argument("--model", choices=("two-out", "worst-case"), required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--integer", action="store_true", help="integer rewards in [-20, 20] instead of U[0,1)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="convergence study on two-out random graphs")
    p.add_argument("--sizes", required=True, help="comma-separated ascending sizes")
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--summary", help="also write per-size means and deviations here")
    p.add_argument("--algo", choices=("find-in-policy", "find-in-history"), default="find-in-policy")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--no-timing", action="store_true", help="record wall_ns=0 for reproducible output")
    p.add_argument("--exact", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="compare a candidate mean against the optimum")
    p.add_argument("--input", required=True)
    p.add_argument("--mu", required=True)
    _mode_flags(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (GraphFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
