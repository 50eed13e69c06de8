"""Plain-file outputs from traces: per-slice CSV, placement SVG, merged ratio table."""
from __future__ import annotations

import csv
import math
from pathlib import Path

from .bounds import disp_reference
from .events import PlacementTrace, atwc_value, cd_value, max_simultaneous, slice_dmins
from .geometry import Polytope


def trace_polytope(trace: PlacementTrace, default: Polytope | None = None) -> Polytope:
    data = trace.meta.get("polytope")
    if data is None:
        if default is None:
            raise ValueError("trace has no polytope metadata; pass one explicitly")
        return default
    return Polytope.from_json(data)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else "-inf"
    return repr(v) if isinstance(v, float) else str(v)


def dmin_series(trace: PlacementTrace, P: Polytope | None = None):
    """Rows (t, n_present, dmin), one per open slice, keyed by its left end."""
    P = trace_polytope(trace, P)
    flag = trace.meta.get("with_boundary", True)
    sl, dm = slice_dmins(trace, P, flag)
    return [(a, len(ids), d) for (a, _), ids, d in zip(sl.intervals, sl.present, dm)]


def write_dmin_csv(trace: PlacementTrace, path: str | Path, P: Polytope | None = None) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "n_present", "dmin"])
        for t, n, d in dmin_series(trace, P):
            w.writerow([_fmt(t), n, _fmt(d)])


def present_at(trace: PlacementTrace, t: float) -> dict[int, tuple]:
    """Positions of the points alive at t (closed lifetimes)."""
    S = trace.lifetimes()
    pos = trace.positions()
    return {p.id: pos[p.id] for p in S.points if p.s <= t <= p.d}


def placement_svg(trace: PlacementTrace, t: float, P: Polytope | None = None, size: int = 400) -> str:
    P = trace_polytope(trace, P)
    if P.dim > 2:
        raise ValueError("snapshots are drawn for dimension 1 or 2 only")
    lo, hi = P.lo, P.hi
    span = float(max(hi - lo))
    pad = 10

    def sx(v):
        return pad + (v - lo[0]) / span * size

    def sy(v):
        return pad + size - (v - lo[1]) / span * size if P.dim == 2 else pad + size / 2

    h = size + 2 * pad
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{h}" height="{h}" viewBox="0 0 {h} {h}">']
    if P.dim == 2:
        out.append(f'<rect x="{sx(lo[0]):.3f}" y="{sy(hi[1]):.3f}" width="{size}" '
                   f'height="{(hi[1] - lo[1]) / span * size:.3f}" fill="none" stroke="black"/>')
    else:
        out.append(f'<line x1="{sx(lo[0]):.3f}" y1="{sy(0):.3f}" x2="{sx(hi[0]):.3f}" '
                   f'y2="{sy(0):.3f}" stroke="black"/>')
    for pid, p in sorted(present_at(trace, t).items()):
        y = p[1] if P.dim == 2 else 0.0
        out.append(f'<circle cx="{sx(p[0]):.3f}" cy="{sy(y):.3f}" r="3" fill="steelblue">'
                   f'<title>{pid}</title></circle>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def ratio_row(trace: PlacementTrace, source: str, P: Polytope | None = None) -> dict:
    P = trace_polytope(trace, P)
    flag = trace.meta.get("with_boundary", True)
    S = trace.lifetimes()
    m = max_simultaneous(S)
    a = atwc_value(trace, P, flag)
    ref, kind = disp_reference(m, P) if flag else (None, None)
    return {
        "algorithm": trace.meta.get("algorithm", "unknown"),
        "source": source,
        "n": len(S),
        "m": m,
        "atwc": a,
        "cd": cd_value(trace, P, flag),
        "reference": ref,
        "reference_kind": kind,
        "ratio_atwc": None if ref is None else (ref / a if a > 0 else math.inf),
    }


RATIO_COLUMNS = ("algorithm", "source", "n", "m", "atwc", "cd", "reference", "reference_kind", "ratio_atwc")


def merged_ratio_table(traces: dict[str, PlacementTrace]) -> list[dict]:
    rows = [ratio_row(tr, src) for src, tr in traces.items()]
    return sorted(rows, key=lambda r: (r["algorithm"], r["m"], r["source"]))


def write_ratio_csv(rows: list[dict], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RATIO_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in RATIO_COLUMNS])
