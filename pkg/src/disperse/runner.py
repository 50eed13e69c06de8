"""Single-run driver: builds the algorithm, runs it, scores both objectives and
checks the algorithm's proven guarantee against the reference bounds."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

from .bounds import disp_reference
from .cd import cd_reference, run_acd
from .events import (EventSequence, PlacementTrace, atwc_value, cd_value, max_simultaneous,
                     slice_dmins)
from .geometry import GeometryError, Polytope, is_unit_segment, is_unit_square
from .greedy import GreedyAlgorithm, SegmentGreedy
from .line import ExactLineAlgorithm, LineAlgorithm, epsilon_to_l
from .online import OnlineAlgorithm, simulate
from .square import DEFAULT_C, SquareAlgorithm

SCHEMA = 1
RATIO_TOL = 1e-9
ALGORITHMS = ("line", "line-exact", "line-greedy", "square", "greedy")


class UsageError(ValueError):
    pass


@dataclass
class RunOptions:
    algo: str = "line"
    objective: str = "both"
    offline: bool = False
    algo_atwc: str | None = None
    l: int | None = None  # None: derived from epsilon if given, else 3
    c: float = DEFAULT_C
    epsilon: float | None = None  # None: 0.1 for greedy
    gamma: float | None = None
    with_boundary: bool = True
    extra: dict = field(default_factory=dict)


def make_algorithm(name: str, P: Polytope, opts: RunOptions) -> OnlineAlgorithm:
    """Fresh algorithm instance; rejects algorithm/polytope pairs it cannot serve."""
    if name not in ALGORITHMS:
        raise UsageError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")
    if name in ("line", "line-exact", "line-greedy") or (name == "greedy" and P.dim == 1):
        if not is_unit_segment(P):
            raise UsageError(f"{name} runs on the unit segment only")
        if name == "line":
            l = opts.l if opts.l is not None else (epsilon_to_l(opts.epsilon) if opts.epsilon else 3)
            algo = LineAlgorithm(l, P)
        elif name == "line-exact":
            algo = ExactLineAlgorithm(P)
        else:
            # the grid search needs k >= 2; on the segment greedy is the largest-gap rule
            return SegmentGreedy(P, with_boundary=opts.with_boundary)
    elif name == "square":
        if not is_unit_square(P):
            raise UsageError("square runs on the unit square only")
        algo = SquareAlgorithm(opts.c, P)
    else:
        eps = 0.1 if opts.epsilon is None else opts.epsilon
        return GreedyAlgorithm(P, eps, opts.gamma, opts.with_boundary)
    if not opts.with_boundary:
        raise UsageError(f"{name} has no boundary-free variant; use greedy or line-greedy")
    return algo


def instance_digest(S: EventSequence) -> dict:
    h = hashlib.sha256()
    for p in S.points:
        h.update(f"{p.id} {p.s!r} {p.d!r}\n".encode())
    return {"n": len(S), "m": max_simultaneous(S), "T": S.horizon, "sha256": h.hexdigest()}


def _ratio(ref: float | None, value: float) -> float | None:
    if ref is None:
        return None
    if value <= 0:
        return math.inf
    return ref / value


def _check(checks: list, name: str, passed: bool, detail: str) -> None:
    checks.append({"name": name, "pass": bool(passed), "detail": detail})


def _greedy_certificates(trace: PlacementTrace, algo: GreedyAlgorithm, checks: list) -> None:
    """Every configuration stays above the distance the created-position count allows."""
    created: set = set()
    worst = math.inf
    where = None
    for rec in trace.records:
        if rec.kind != "arrive":
            continue
        created.add(rec.pos)
        need = algo.search.certificate(len(created))
        if math.isfinite(rec.dmin) and rec.dmin / need < worst:
            worst, where = rec.dmin / need, (rec.t, rec.id, len(created))
    ok = worst >= 1 - RATIO_TOL
    detail = "no defined configuration" if where is None else (
        f"min d_min/certificate = {worst:.6f} at t={where[0]} id={where[1]} (|created|={where[2]})")
    _check(checks, "greedy-certificate", ok, detail)


def slice_table(trace: PlacementTrace, S: EventSequence, P: Polytope, with_boundary: bool):
    """Rows (left, right, n_present, d_min, reference) over the timeline slices."""
    sl, dm = slice_dmins(trace, P, with_boundary)
    refs = cd_reference(S, P)[2] if with_boundary else None
    rows = []
    for k, ((a, b), ids) in enumerate(zip(sl.intervals, sl.present)):
        ref = refs[k][3] if refs is not None else None
        rows.append({"left": a, "right": b, "n": len(ids), "dmin": dm[k], "reference": ref})
    return rows


def run(S: EventSequence, P: Polytope, opts: RunOptions):
    """Returns (report dict, trace). Raises UsageError on incompatible inputs."""
    if opts.objective not in ("atwc", "cd", "both"):
        raise UsageError(f"unknown objective {opts.objective!r}")
    if opts.offline:
        if opts.objective == "atwc":
            raise UsageError("--offline applies to the cd objective")
        inner = make_algorithm(opts.algo_atwc or opts.algo, P, opts)
        groups, trace = run_acd(S, inner, P)
        algo = inner
        label = f"acd[{inner.name}]"
    else:
        algo = make_algorithm(opts.algo, P, opts)
        trace = simulate(S, algo)
        groups = None
        label = algo.name
    flag = algo.with_boundary
    checks: list = []
    digest = instance_digest(S)
    m = digest["m"]
    ceiling = algo.guarantee()

    ref, ref_kind = (disp_reference(m, P) if flag and m >= 1 else (None, None))
    a_val = atwc_value(trace, P, flag)
    a_ratio = _ratio(ref, a_val)
    checkable = ref_kind == "exact" or (ref_kind is not None and algo.ceiling_vs_upper)
    atwc_part = {"value": a_val, "reference": ref, "reference_kind": ref_kind,
                 "ratio": a_ratio, "ratio_is_bound": ref_kind not in (None, "exact"),
                 "ceiling": ceiling}
    if not opts.offline and ceiling is not None and a_ratio is not None:
        if checkable:
            _check(checks, "atwc-ratio", a_ratio <= ceiling + RATIO_TOL,
                   f"ratio {a_ratio:.10g} vs ceiling {ceiling:.10g} ({ref_kind} reference)")
    if isinstance(algo, GreedyAlgorithm) and not opts.offline:
        _greedy_certificates(trace, algo, checks)

    report = {
        "schema": SCHEMA,
        "algorithm": {"name": label, "params": algo.params()},
        "polytope": P.to_json(),
        "with_boundary": flag,
        "objective": opts.objective,
        "instance": digest,
    }
    if opts.objective in ("atwc", "both") and not opts.offline:
        report["atwc"] = atwc_part
    if opts.objective in ("cd", "both"):
        c_val = cd_value(trace, P, flag)
        ub, ub_kind, _ = cd_reference(S, P) if flag else (None, None, None)
        c_ratio = _ratio(ub, c_val)
        cd_part = {"value": c_val, "upper_bound": ub, "bound_kind": ub_kind, "ratio": c_ratio,
                   "slices": slice_table(trace, S, P, flag)}
        if opts.offline:
            cd_ceiling = None if ceiling is None else 2 * ceiling
            cd_part["ceiling"] = cd_ceiling
            cd_part["passes"] = groups.passes
            _check(checks, "acd-passes", groups.passes <= max(m, 1),
                   f"{groups.passes} passes for m={m}")
            if cd_ceiling is not None and c_ratio is not None and (ub_kind == "exact" or algo.ceiling_vs_upper):
                _check(checks, "cd-ratio", c_ratio <= cd_ceiling + RATIO_TOL,
                       f"ratio {c_ratio:.10g} vs ceiling {cd_ceiling:.10g}")
        elif S.is_insert_only() and ceiling is not None and c_ratio is not None and (
                ub_kind == "exact" or algo.ceiling_vs_upper):
            cd_part["ceiling"] = ceiling
            _check(checks, "insert-only-cd-ratio", c_ratio <= ceiling + RATIO_TOL,
                   f"ratio {c_ratio:.10g} vs ceiling {ceiling:.10g}")
        report["cd"] = cd_part
    report["checks"] = checks
    report["pass"] = all(c["pass"] for c in checks)
    return report, trace


def _encode(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    return obj


def dumps(report: dict) -> str:
    """Deterministic JSON text, newline-terminated."""
    return json.dumps(_encode(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


__all__ = ["RunOptions", "UsageError", "GeometryError", "make_algorithm",
           "run", "dumps", "instance_digest", "slice_table", "SCHEMA"]
