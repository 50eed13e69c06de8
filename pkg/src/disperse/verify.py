"""Closed-form identity and guarantee checks, grouped into suites.

Each check returns a ``Check``; the suites are what ``disperse verify`` runs and
the acceptance tests call the same functions with the same parameters.
"""
from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .adversary import adaptive_cd_adversary, gen_random, gen_sequential, gen_three_stage
from .bounds import brute_force_disp, disp_kd_lower, disp_reference, disp_segment, disp_square_exact_small
from .cd import cd_upper_bound, partition_groups, run_acd, select_pair
from .events import EventSequence, atwc_value, cd_value, instant_sets, max_simultaneous, slice_timeline
from .geometry import segment, square
from .greedy import GreedyAlgorithm, SegmentGreedy
from .line import (ExactLineAlgorithm, LineAlgorithm, build_harmonic_config, exact_apx, exact_dmin,
                   predicted_dmin, predicted_dmin_exact, worst_small_ratio)
from .online import simulate
from .square import (DEFAULT_C, OPTIMAL_C, InternalConsistencyError, SquareAlgorithm, build_square_config,
                     case_counts, predicted_dmin_square, ratio_ceiling, round_start)

LN2x2 = 2 * math.log(2)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    metrics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "pass": self.passed, "detail": self.detail, "metrics": self.metrics}

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def sequential_dmins(algo, n: int) -> np.ndarray:
    """d_min after each of the n arrivals of the sequential instance."""
    trace = simulate(gen_sequential(n), algo)
    return np.array([r.dmin for r in trace.records if r.kind == "arrive"])


# ------------------------------------------------------------------- line

def exact_sequential_dmins(l: int, n: int) -> list[Fraction]:
    """As sequential_dmins, but measured on the algorithm's exact rational positions."""
    algo = LineAlgorithm(l)
    simulate(gen_sequential(n), algo)
    cuts = [Fraction(0), Fraction(1)]
    best = None
    out = []
    for x in algo.exact_positions:
        k = bisect.bisect_left(cuts, x)
        gap = min(x - cuts[k - 1], cuts[k] - x)
        best = gap if best is None else min(best, gap)
        cuts.insert(k, x)
        out.append(best)
    return out


def check_line_identity(ls=(1, 2, 3, 4, 5), m_max: int = 10**4) -> Check:
    worst = 0.0
    float_worst = 0.0
    for l in ls:
        cfg = build_harmonic_config(l)
        want = [predicted_dmin_exact(m, cfg) for m in range(1, m_max + 1)]
        got = exact_sequential_dmins(l, m_max)
        worst = max(worst, max(float(abs(g - w) / w) for g, w in zip(got, want)))
        traced = sequential_dmins(LineAlgorithm(l), m_max)
        wf = np.array([float(w) for w in want])
        float_worst = max(float_worst, float(np.max(np.abs(traced - wf) / wf)))
    return Check("line-identity", worst <= 1e-12,
                 f"max relative gap {worst:.3e} over l in {list(ls)}, m <= {m_max} "
                 f"(float trace {float_worst:.1e})", {"max_rel": worst, "float_trace_max_rel": float_worst})


def check_line_guarantee(ls=(1, 2, 3, 4, 5), m_max: int = 10**4) -> Check:
    ok = True
    parts = []
    metrics = {}
    for l in ls:
        cfg = build_harmonic_config(l)
        got = sequential_dmins(LineAlgorithm(l), m_max)
        ratios = np.array([disp_segment(m) for m in range(1, m_max + 1)]) / got
        top = float(ratios.max())
        small = float(ratios[: cfg.r].max())
        want_small = worst_small_ratio(cfg)
        good = top <= cfg.guarantee + 1e-12 and _rel(small, want_small) <= 1e-12
        ok &= good
        metrics[f"l={l}"] = {"max_ratio": top, "ceiling": cfg.guarantee, "small_max": small,
                             "small_expected": want_small}
        parts.append(f"l={l}: {top:.6f}<= {cfg.guarantee:.6f}, small {small:.9f}")
    return Check("line-guarantee", ok, "; ".join(parts), metrics)


def check_three_stage(ls=(1, 2, 3, 4, 5), rs=range(2, 65)) -> Check:
    worst, where = 0.0, None
    for l in ls:
        cfg = build_harmonic_config(l)
        for r in rs:
            S = gen_three_stage(r)
            a = atwc_value(simulate(S, LineAlgorithm(l)), segment())
            slack = disp_segment(max_simultaneous(S)) / a / cfg.guarantee
            if slack > worst:
                worst, where = slack, (l, r)
    return Check("three-stage", worst <= 1 + 1e-12,
                 f"max ratio/ceiling {worst:.6f} at (l, r)={where}", {"max_over_ceiling": worst})


def check_line_exact(d_max: int = 10**5, d_sim: int = 4096) -> Check:
    apx = np.array([exact_apx(d) for d in range(1, d_max + 1)])
    below = bool(np.all(apx < LN2x2))
    far = abs(exact_apx(2**20) - LN2x2)
    got = sequential_dmins(ExactLineAlgorithm(), d_sim)
    want = np.array([exact_dmin(d) for d in range(1, d_sim + 1)])
    gap = float(np.max(np.abs(got - want)))
    ok = below and far <= 1e-5 and gap <= 1e-9
    return Check("line-exact", ok,
                 f"max apx {apx.max():.7f} < {LN2x2:.7f}: {below}; |apx(2^20) - 2ln2| = {far:.2e}; "
                 f"sim vs closed form {gap:.2e} for d <= {d_sim}",
                 {"max_apx": float(apx.max()), "apx_2_20_gap": far, "sim_gap": gap})


# ----------------------------------------------------------------- square

class _CaseTally(SquareAlgorithm):
    def __init__(self, c):
        super().__init__(c)
        self.cases = []

    def create_position(self):
        pos = super().create_position()
        self.cases.append(self.state.last_case)
        return pos


@lru_cache(maxsize=4)
def square_sequential(c: float, n_max: int):
    algo = _CaseTally(c)
    return sequential_dmins(algo, n_max), tuple(algo.cases)


def check_square_identity(c: float = DEFAULT_C, n_max: int = round_start(5)) -> Check:
    cfg = build_square_config(c)
    got, _ = square_sequential(c, n_max)
    want = np.array([predicted_dmin_square(n, cfg) for n in range(1, n_max + 1)])
    worst = float(np.max(np.abs(got - want) / want))
    return Check("square-identity", worst <= 1e-12, f"max relative gap {worst:.3e} for n <= {n_max} (c={c})",
                 {"max_rel": worst})


def check_square_counts(c: float = DEFAULT_C, rounds: int = 5) -> Check:
    _, cases = square_sequential(c, round_start(rounds))
    bad = []
    for i in range(rounds):
        got = tuple(sum(1 for rc in cases if rc == (i, k)) for k in range(1, 6))
        if got != case_counts(i):
            bad.append((i, got, case_counts(i)))
    return Check("square-counts", not bad,
                 f"rounds 0..{rounds - 1} per-case counts match" if not bad else f"mismatches {bad}")


def write_square_rows(path, c: float = DEFAULT_C, n_max: int = round_start(5)) -> None:
    cfg = build_square_config(c)
    got, cases = square_sequential(c, n_max)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "round", "case", "dmin", "predicted"])
        for n in range(1, n_max + 1):
            i, k = cases[n - 1]
            w.writerow([n, i, k, repr(float(got[n - 1])), repr(predicted_dmin_square(n, cfg))])


@lru_cache(maxsize=2)
def _square_references(n_max: int) -> np.ndarray:
    P = square()
    return np.array([disp_reference(n, P)[0] for n in range(1, n_max + 1)])


def square_ratios(c: float, n_max: int) -> np.ndarray:
    got, _ = square_sequential(c, n_max)
    return _square_references(n_max) / got


def check_square_ratio(c: float = DEFAULT_C, n_max: int = round_start(5), ceiling: str = "nominal",
                       name: str | None = None) -> Check:
    """ceiling: 'nominal' is (3+4c)/(4c); 'computed' is the largest reference ratio over all groups."""
    cfg = build_square_config(c)
    bound = cfg.nominal_ceiling if ceiling == "nominal" else ratio_ceiling(cfg)
    r = square_ratios(c, n_max)
    top = float(r.max())
    at = int(np.argmax(r)) + 1
    return Check(name or f"square-ratio-{ceiling}", top <= bound + 1e-9,
                 f"max ratio {top:.10f} at n={at} vs {bound:.10f} (c={c})",
                 {"max_ratio": top, "argmax_n": at, "bound": bound})


def check_square_headline(c: float = DEFAULT_C, n_max: int = round_start(5)) -> Check:
    top = float(square_ratios(c, n_max).max())
    return Check("square-ratio-1.591", top < 1.591, f"max ratio {top:.7f} < 1.591 (c={c})", {"max_ratio": top})


# ----------------------------------------------------------------- oracle

SQUARE_ORACLE_RES = {1: 101, 2: 101, 3: 101, 4: 101, 5: 101, 6: 41}


@lru_cache(maxsize=None)
def oracle_square(n: int, budget: int | None = None) -> float:
    return brute_force_disp(n, square(), grid_res=SQUARE_ORACLE_RES[n], budget=budget)[0]


@lru_cache(maxsize=None)
def oracle_segment(n: int, budget: int | None = None) -> float:
    return brute_force_disp(n, segment(), grid_res=1001, budget=budget)[0]


def check_oracle_table(budget: int | None = None) -> Check:
    sq = {n: oracle_square(n, budget) for n in (1, 2, 5)}
    seg = {n: oracle_segment(n, budget) for n in range(1, 6)}
    sq_gap = max(abs(v - disp_square_exact_small(n)) for n, v in sq.items())
    seg_gap = max(abs(v - disp_segment(n)) for n, v in seg.items())
    ok = sq_gap <= 0.01 and seg_gap <= 1e-3
    return Check("oracle-table", ok, f"square gap {sq_gap:.5f} (<= 0.01), segment gap {seg_gap:.5f} (<= 1e-3)",
                 {"square": sq, "segment": seg})


def check_halving(i_max: int = 100, square_is=(1, 2, 3), budget: int | None = None) -> Check:
    seg = max(disp_segment(i) / disp_segment(2 * i) for i in range(1, i_max + 1))
    sq = {i: oracle_square(i, budget) / oracle_square(2 * i, budget) for i in square_is}
    ok = seg < 2 and max(sq.values()) <= 2.05
    return Check("halving-ratio", ok, f"segment max {seg:.6f} < 2; square oracle {sq}",
                 {"segment_max": seg, "square": sq})


# ----------------------------------------------------------------- greedy

def check_greedy_certificate(eps_list=(0.1, 0.5), n_max: int = 50) -> Check:
    worst = math.inf
    for eps in eps_list:
        got = sequential_dmins(GreedyAlgorithm(square(), eps, 1.0), n_max)
        need = np.array([(1 - eps) / 2 * disp_kd_lower(n, 2, 1.0) for n in range(1, n_max + 1)])
        worst = min(worst, float(np.min(got / need)))
    return Check("greedy-certificate", worst >= 1.0, f"min d_min over (1-eps)/2 * lower bound = {worst:.4f}",
                 {"min_over_bound": worst})


def check_greedy_oracle(eps_list=(0.1, 0.5), n_max: int = 6, budget: int | None = None) -> Check:
    ok = True
    parts = []
    metrics = {}
    for eps in eps_list:
        got = sequential_dmins(GreedyAlgorithm(square(), eps, 1.0), n_max)
        ratios = [oracle_square(n, budget) / got[n - 1] for n in range(1, n_max + 1)]
        top = max(ratios)
        bound = 2 / (1 - eps) + 0.05
        ok &= top <= bound
        metrics[f"eps={eps}"] = {"max_ratio": top, "bound": bound}
        parts.append(f"eps={eps}: {top:.4f} <= {bound:.4f}")
    return Check("greedy-oracle", ok, "; ".join(parts), metrics)


# --------------------------------------------------------------------- cd

def random_family(count: int, seed0: int = 0, n_max: int = 100):
    for seed in range(seed0, seed0 + count):
        n = 1 + int(np.random.default_rng(seed).integers(n_max))
        yield seed, gen_random(n, seed=seed, horizon=10.0)


def selection_violations(S: EventSequence, I1, I2) -> list[str]:
    by_id = S.by_id()
    out = []
    for name, group in (("I1", I1), ("I2", I2)):
        spans = sorted((by_id[i].s, by_id[i].d) for i in group)
        for (a0, b0), (a1, _) in zip(spans, spans[1:]):
            if a1 <= b0:
                out.append(f"{name} lifetimes overlap at {a1}")
    chosen = set(I1) | set(I2)
    for t, ids in instant_sets(S):
        if ids and not ids & chosen:
            out.append(f"nothing selected present at t={t}")
    sl = slice_timeline(S)
    for (a, b), ids in zip(sl.intervals, sl.present):
        if ids and not ids & chosen:
            out.append(f"nothing selected present on ({a}, {b})")
    return out


def check_selection(count: int = 1000) -> Check:
    bad = []
    over = []
    for seed, S in random_family(count):
        pair = select_pair(S)
        v = selection_violations(S, pair.I1, pair.I2)
        if v:
            bad.append((seed, v[0]))
        passes = len(partition_groups(S)) // 2
        if passes > max_simultaneous(S):
            over.append(seed)
    ok = not bad and not over
    return Check("cd-selection", ok,
                 f"{count} sequences: selection violations {len(bad)}, pass-count overruns {len(over)}"
                 + (f"; first {bad[0]}" if bad else ""), {"violations": len(bad), "overruns": len(over)})


def check_acd_bound(count: int = 100, l: int = 3) -> Check:
    cfg = build_harmonic_config(l)
    P = segment()
    worst = math.inf
    for _, S in random_family(count, seed0=10_000):
        _, trace = run_acd(S, LineAlgorithm(l), P)
        margin = cd_value(trace, P) - cd_upper_bound(S, P) / (2 * cfg.guarantee)
        worst = min(worst, margin)
    return Check("cd-acd-bound", worst >= -1e-9,
                 f"min cd_value - upper/(2*{cfg.guarantee:.5f}) = {worst:.4g} over {count} instances",
                 {"min_margin": worst})


def check_adversary_growth(ns=(4, 8, 16, 32), T: float = 1000.0) -> Check:
    P = segment()
    ratios = []
    for n in ns:
        S, trace = adaptive_cd_adversary(SegmentGreedy(P), n, T)
        ratios.append(cd_upper_bound(S, P) / cd_value(trace, P))
    ok = all(b > a for a, b in zip(ratios, ratios[1:]))
    return Check("cd-adversary-growth", ok, f"cd ratios {[round(r, 4) for r in ratios]} for n={list(ns)}",
                 {"ratios": ratios})


def _named(fn, label, /, **kw):
    def call(**extra):
        return fn(**kw, **extra)
    call.__name__ = label
    return call


SUITES = {
    "line": (check_line_identity, check_line_guarantee, check_three_stage),
    "line-exact": (check_line_exact,),
    "square": (check_square_identity, check_square_counts,
               _named(check_square_ratio, "square_ratio_nominal", ceiling="nominal"),
               _named(check_square_ratio, "square_ratio_computed", ceiling="computed"),
               check_square_headline,
               _named(check_square_ratio, "square_ratio_optimal_c", c=OPTIMAL_C, ceiling="nominal",
                      name="square-ratio-optimal-c")),
    "greedy": (check_greedy_certificate, check_greedy_oracle),
    "cd": (check_selection, check_acd_bound, check_adversary_growth),
    "oracle": (check_oracle_table, check_halving),
}
_TAKES_BUDGET = {"check_oracle_table", "check_halving", "check_greedy_oracle"}


def run_suite(name: str, budget: int | None = None) -> list[Check]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    out = []
    for fn in SUITES[name]:
        try:
            if budget is not None and fn.__name__ in _TAKES_BUDGET:
                out.append(fn(budget=budget))
            else:
                out.append(fn())
        except InternalConsistencyError as exc:
            out.append(Check(fn.__name__, False, f"internal consistency: {exc}", {"internal": True}))
        except Exception as exc:  # failures are summary content
            out.append(Check(fn.__name__, False, f"{type(exc).__name__}: {exc}"))
    return out
