"""Command line front end: generate workloads, run rankers, sweep grids."""

from __future__ import annotations

import argparse
import json
import sys
import time

from .errors import ForestFormatError, UncoveredCaseError
from .model import LinkedForest
from .pram import PramConfig
from .ranking import list_rank, sequential_rank, wyllie_rank
from .workloads import Workload, generate


def build_parser():
    p = argparse.ArgumentParser(prog="listcontract",
                                description="uniform linked-list contraction toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a forest file")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--lists", type=int, default=1)
    g.add_argument("--dist", default="UNIFORM",
                   help="UNIFORM | GEOMETRIC | FIXED:<l> | SINGLE")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--shuffle", action="store_true")
    g.add_argument("--out", default="-")

    r = sub.add_parser("run", help="rank a forest file")
    r.add_argument("forest")
    r.add_argument("--algo", choices=("uniform", "wyllie", "sequential"),
                   default="uniform")
    r.add_argument("--p", type=int, default=1)
    r.add_argument("--verify", action="store_true")
    r.add_argument("--trace", action="store_true")
    r.add_argument("--out", default=None)

    w = sub.add_parser("sweep", help="run a grid of (n, l, p) triples")
    w.add_argument("--spec", required=True,
                   help="semicolon-separated n,l,p triples, e.g. '1024,16,8;2048,16,8'")
    w.add_argument("--algo", default="uniform,wyllie",
                   help="comma-separated algorithms")
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--out", default="-")
    return p


def _parse_dist(text):
    if text.upper().startswith("FIXED"):
        _, _, val = text.partition(":")
        if not val:
            raise ValueError("FIXED needs a length, e.g. FIXED:16")
        return "FIXED", int(val)
    return text.upper(), 0


def cmd_generate(args):
    dist, fixed = _parse_dist(args.dist)
    forest = generate(Workload(n=args.n, num_lists=args.lists,
                               length_distribution=dist, fixed_length=fixed,
                               seed=args.seed, layout_shuffle=args.shuffle))
    text = forest.to_text()
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return 0


def run_report(forest, algo, p, verify=False, trace=False):
    """Execute one ranker and return the report dictionary."""
    n, l = forest.n, forest.longest()
    report = {"n": n, "l": l, "p": p, "algorithm": algo}
    t0 = time.perf_counter()
    trace_lines = []
    if algo == "sequential":
        result = sequential_rank(forest)
        report.update(rounds=n, total_work=n, erew_violations=0,
                      passes=0, survivor_counts=[], jump_rounds=0)
    else:
        config = PramConfig(num_processors=p, record_trace=trace)
        if algo == "uniform":
            run = list_rank(forest, config=config)
        elif algo == "wyllie":
            run = wyllie_rank(forest, config=config)
        else:
            raise ValueError(f"unknown algorithm {algo!r}")
        result = run.result
        m = run.metrics
        trace_lines = run.trace
        report.update(rounds=m.rounds, total_work=m.total_work,
                      erew_violations=m.erew_violations,
                      passes=len(run.passes) if hasattr(run, "passes") else 0,
                      survivor_counts=getattr(run, "survivor_counts", []),
                      jump_rounds=run.jump_rounds)
    report["wall_seconds"] = round(time.perf_counter() - t0, 6)
    if verify:
        oracle = sequential_rank(forest)
        report["verified"] = bool(result.same_as(oracle))
    return report, result, trace_lines


def cmd_run(args):
    try:
        with open(args.forest) as fh:
            forest = LinkedForest.from_text(fh.read())
    except (OSError, ForestFormatError) as exc:
        print(f"error: cannot load forest: {exc}", file=sys.stderr)
        return 2
    try:
        report, _, trace_lines = run_report(forest, args.algo, args.p,
                                            verify=args.verify, trace=args.trace)
    except UncoveredCaseError as exc:
        print(f"UNCOVERED_CASE: {exc}", file=sys.stderr)
        print(json.dumps(exc.snapshot, indent=2), file=sys.stderr)
        return 3
    if args.trace:
        for line in trace_lines:
            print(line)
    for key, val in report.items():
        print(f"{key}: {val}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0 if report.get("verified", True) else 1


SWEEP_COLUMNS = ["n", "l", "p", "algorithm", "rounds", "total_work",
                 "erew_violations", "passes", "jump_rounds", "status"]


def cmd_sweep(args):
    rows = []
    triples = []
    if args.spec.strip():
        for part in args.spec.split(";"):
            n, l, p = (int(x) for x in part.split(","))
            triples.append((n, l, p))
    algos = [a for a in args.algo.split(",") if a]
    for n, l, p in triples:
        if n % l:
            rows.append({"n": n, "l": l, "p": p, "algorithm": "-",
                         "status": "FAILED"})
            continue
        forest = generate(Workload(n=n, length_distribution="FIXED",
                                   fixed_length=l, seed=args.seed))
        for algo in algos:
            try:
                report, _, _ = run_report(forest, algo, p)
                report["status"] = "OK"
            except Exception as exc:   # keep sweeping, mark the row
                report = {"n": n, "l": l, "p": p, "algorithm": algo,
                          "status": f"FAILED:{type(exc).__name__}"}
            rows.append(report)
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append(",".join(str(row.get(c, "")) for c in SWEEP_COLUMNS))
    text = "\n".join(lines) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "generate":
        return cmd_generate(args)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "sweep":
        return cmd_sweep(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
