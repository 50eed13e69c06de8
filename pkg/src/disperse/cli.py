"""disperse gen | run | verify | report

Exit codes: 0 pass, 1 usage or input error, 2 guarantee violation,
3 internal consistency failure.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__, verify
from .adversary import FAMILIES, GeneratorSpec, adaptive_cd_adversary, generate
from .events import EventError, PlacementTrace, read_instance, write_instance
from .geometry import BUILTINS, GeometryError, Polytope, builtin, load_polytope
from .reporting import merged_ratio_table, placement_svg, write_dmin_csv, write_ratio_csv
from .runner import ALGORITHMS, RunOptions, UsageError, dumps, make_algorithm, run
from .square import DEFAULT_C, InternalConsistencyError

EXIT_OK, EXIT_USAGE, EXIT_GUARANTEE, EXIT_INTERNAL = 0, 1, 2, 3


def _polytope(name: str | None, algo: str) -> Polytope:
    if name is None:
        name = "segment" if algo.startswith("line") else "square"
    if name in BUILTINS:
        return builtin(name)
    return load_polytope(name)


def _write(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# ------------------------------------------------------------------ gen

def cmd_gen(args) -> int:
    if args.family == "adaptive_cd":
        raise UsageError("adaptive_cd reacts to an algorithm; use `disperse run --adversary adaptive_cd`")
    params = {"n": args.n, "r": args.r, "seed": args.seed, "horizon": args.horizon}
    need = "r" if args.family == "three_stage" else "n"
    if params[need] is None:
        raise UsageError(f"--{need} is required for family {args.family}")
    seq = generate(GeneratorSpec(args.family, {k: v for k, v in params.items() if v is not None}))
    header = f"family={args.family} " + " ".join(f"{k}={v}" for k, v in sorted(params.items()) if v is not None)
    if args.output in (None, "-"):
        for s, d in seq.pairs():
            sys.stdout.write(f"{s!r} {d!r}\n")
    else:
        write_instance(seq, args.output, header=header)
    return EXIT_OK


# ------------------------------------------------------------------ run

def _options(args) -> RunOptions:
    return RunOptions(algo=args.algo, objective=args.objective, offline=args.offline,
                      algo_atwc=args.algo_atwc, l=args.l, c=args.c, epsilon=args.epsilon,
                      gamma=args.gamma, with_boundary=not args.no_boundary)


def _run_one(task):
    path, poly_json, opts = task
    S = read_instance(path)
    report, trace = run(S, Polytope.from_json(poly_json), opts)
    report["instance"]["path"] = str(path)
    return report, trace


def _diagnose(report: dict) -> None:
    for c in report["checks"]:
        if not c["pass"]:
            print(f"guarantee violation [{c['name']}]: {c['detail']}", file=sys.stderr)


def cmd_run(args) -> int:
    opts = _options(args)
    P = _polytope(args.polytope, args.algo_atwc or args.algo)
    if args.adversary:
        if args.instances:
            raise UsageError("--adversary builds its own instance; drop the instance paths")
        if args.offline:
            raise UsageError("the adaptive adversary drives an online algorithm")
        algo = make_algorithm(args.algo, P, opts)
        S, _ = adaptive_cd_adversary(algo, args.n, args.T)
        report, trace = run(S, P, opts)
        report["instance"]["adversary"] = {"family": "adaptive_cd", "n": args.n, "T": args.T}
        results = [(report, trace)]
    else:
        if not args.instances:
            raise UsageError("give at least one instance file (or --adversary adaptive_cd)")
        tasks = [(p, P.to_json(), opts) for p in sorted(args.instances)]
        if args.jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_run_one, tasks))
        else:
            results = [_run_one(t) for t in tasks]
    if len(results) == 1:
        report, trace = results[0]
        _write(dumps(report), args.output)
        if args.trace:
            trace.write_jsonl(args.trace)
        if args.csv:
            write_dmin_csv(trace, args.csv, P)
    else:
        if args.trace or args.csv:
            raise UsageError("--trace/--csv take a single instance")
        merged = {"schema": 1, "runs": [r for r, _ in results]}
        merged["pass"] = all(r["pass"] for r in merged["runs"])
        _write(dumps(merged), args.output)
    for report, _ in results:
        _diagnose(report)
    return EXIT_OK if all(r["pass"] for r, _ in results) else EXIT_GUARANTEE


# --------------------------------------------------------------- verify

def _suite(task):
    name, budget = task
    return name, [c.to_json() for c in verify.run_suite(name, budget)]


def cmd_verify(args) -> int:
    names = args.suites or list(verify.SUITES)
    for n in names:
        if n not in verify.SUITES:
            raise UsageError(f"unknown suite {n!r}; choose from {', '.join(verify.SUITES)}")
    tasks = [(n, args.oracle_budget) for n in names]
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = dict(pool.map(_suite, tasks))
    else:
        results = dict(_suite(t) for t in tasks)
    checks = [c for n in names for c in results[n]]
    summary = {"schema": 1, "suites": {n: results[n] for n in names},
               "pass": all(c["pass"] for c in checks)}
    if args.json:
        _write(dumps(summary), args.output)
    else:
        lines = [f"{'PASS' if c['pass'] else 'FAIL'} {n}/{c['name']}: {c['detail']}" for n in names for c in results[n]]
        _write("\n".join(lines) + "\n", args.output)
    if args.square_rows:
        verify.write_square_rows(args.square_rows)
    if any(c["metrics"].get("internal") for c in checks):
        return EXIT_INTERNAL
    return EXIT_OK if summary["pass"] else EXIT_GUARANTEE


# --------------------------------------------------------------- report

def cmd_report(args) -> int:
    traces = {str(p): PlacementTrace.read_jsonl(p) for p in sorted(args.traces)}
    P = _polytope(args.polytope, "") if args.polytope else None
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for src, tr in traces.items():
        write_dmin_csv(tr, out / f"{Path(src).stem}.csv", P)
        if args.svg_at is not None:
            (out / f"{Path(src).stem}.svg").write_text(placement_svg(tr, args.svg_at, P), encoding="utf-8")
    if len(traces) > 1 or args.table:
        write_ratio_csv(merged_ratio_table(traces), out / "ratios.csv")
    return EXIT_OK


# ----------------------------------------------------------------- main

class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 means a guarantee violation here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="disperse", description="online dispersion experiments")
    ap.add_argument("--version", action="version", version=f"disperse {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a generated instance")
    g.add_argument("--family", required=True, choices=FAMILIES)
    g.add_argument("--n", type=int)
    g.add_argument("--r", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--horizon", type=float)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run an algorithm on instances and score it")
    r.add_argument("instances", nargs="*")
    r.add_argument("--algo", default="line", choices=ALGORITHMS)
    r.add_argument("--polytope", "--builtin", dest="polytope",
                   help=f"one of {', '.join(BUILTINS)} or a polytope JSON file")
    r.add_argument("--objective", default="both", choices=("atwc", "cd", "both"))
    r.add_argument("--offline", action="store_true", help="offline cd via the grouping reduction")
    r.add_argument("--algo-atwc", choices=ALGORITHMS, help="black-box algorithm for --offline")
    r.add_argument("--l", type=int, help="line: number of halving levels (default 3)")
    r.add_argument("--c", type=float, default=DEFAULT_C)
    r.add_argument("--epsilon", type=float, help="greedy grid accuracy (default 0.1); for line, sets l")
    r.add_argument("--gamma", type=float)
    r.add_argument("--no-boundary", action="store_true", help="drop the boundary term")
    r.add_argument("--adversary", choices=("adaptive_cd",))
    r.add_argument("--n", type=int, default=8)
    r.add_argument("--T", type=float, default=1000.0)
    r.add_argument("-o", "--output")
    r.add_argument("--trace", help="write the placement trace (JSON lines)")
    r.add_argument("--csv", help="write the per-slice d_min series")
    r.add_argument("--jobs", type=int, default=1)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run identity and guarantee suites")
    v.add_argument("suites", nargs="*", help=f"any of {', '.join(verify.SUITES)} (default all)")
    v.add_argument("--json", action="store_true")
    v.add_argument("--oracle-budget", type=int, help="search-node budget (env DISPERSE_ORACLE_BUDGET)")
    v.add_argument("-o", "--output")
    v.add_argument("--square-rows", metavar="CSV", help="also write per-n square rows (n, round, case, dmin, predicted)")
    v.add_argument("--jobs", type=int, default=1)
    v.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="CSV/SVG data files from traces")
    p.add_argument("traces", nargs="+")
    p.add_argument("--out-dir", default="report")
    p.add_argument("--svg-at", type=float, help="snapshot time for an SVG of present points")
    p.add_argument("--table", action="store_true", help="write ratios.csv even for one trace")
    p.add_argument("--polytope", help="fallback polytope for traces without metadata")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InternalConsistencyError as exc:
        print(f"internal consistency failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (UsageError, EventError, GeometryError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
