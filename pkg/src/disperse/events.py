"""Arrival/departure sequences, timeline slicing and the two objective evaluators.

Presence is closed: a point is present at t iff s <= t <= d. Events sharing a
timestamp therefore coexist at that instant.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .geometry import Point, Polytope

INF = float("inf")


class EventError(ValueError):
    pass


@dataclass(frozen=True)
class Lifetime:
    id: int
    s: float
    d: float


@dataclass(frozen=True)
class EventSequence:
    points: tuple[Lifetime, ...]

    def __post_init__(self):
        seen = set()
        for p in self.points:
            if p.id in seen:
                raise EventError(f"duplicate point id {p.id}")
            seen.add(p.id)
            if not (math.isfinite(p.s) and math.isfinite(p.d)):
                raise EventError(f"point {p.id}: non-finite time")
            if p.s < 0:
                raise EventError(f"point {p.id}: negative arrival time {p.s}")
            if not p.d > p.s:
                raise EventError(f"point {p.id}: departure {p.d} must exceed arrival {p.s}")
        ordered = tuple(sorted(self.points, key=lambda p: (p.s, p.id)))
        object.__setattr__(self, "points", ordered)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]], ids: Iterable[int] | None = None):
        pairs = [(float(s), float(d)) for s, d in pairs]
        ids = list(ids) if ids is not None else list(range(1, len(pairs) + 1))
        if len(ids) != len(pairs):
            raise EventError("ids and pairs differ in length")
        return cls(tuple(Lifetime(i, s, d) for i, (s, d) in zip(ids, pairs)))

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def horizon(self) -> float:
        return max((p.d for p in self.points), default=0.0)

    def by_id(self) -> dict[int, Lifetime]:
        return {p.id: p for p in self.points}

    def pairs(self) -> list[tuple[float, float]]:
        return [(p.s, p.d) for p in self.points]

    def subset(self, ids: Iterable[int]) -> "EventSequence":
        keep = set(ids)
        return EventSequence(tuple(p for p in self.points if p.id in keep))

    def is_insert_only(self) -> bool:
        return len({p.d for p in self.points}) <= 1

    def ordered_events(self) -> list[tuple[float, int, int]]:
        """(t, kind, id) with kind 0 = arrive, 1 = depart; arrivals first at ties."""
        ev = [(p.s, 0, p.id) for p in self.points] + [(p.d, 1, p.id) for p in self.points]
        ev.sort()
        return ev


def read_instance(path: str | Path) -> EventSequence:
    pairs = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise EventError(f"{path}:{lineno}: expected 's d', got {line!r}")
            try:
                pairs.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise EventError(f"{path}:{lineno}: not a number in {line!r}") from None
    return EventSequence.from_pairs(pairs)


def write_instance(seq: EventSequence, path: str | Path, header: str | None = None) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for p in sorted(seq.points, key=lambda p: p.id):
            fh.write(f"{p.s!r} {p.d!r}\n")


# ------------------------------------------------------------- slicing ----

def max_simultaneous(S: EventSequence) -> int:
    best = cur = 0
    for _, kind, _ in S.ordered_events():
        cur += 1 if kind == 0 else -1
        best = max(best, cur)
    return best


@dataclass(frozen=True)
class TimelineSlices:
    intervals: tuple[tuple[float, float], ...]
    present: tuple[frozenset, ...]

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.present)

    def __len__(self) -> int:
        return len(self.intervals)


def _sweep(S: EventSequence):
    """Yield (t, closed set at t, set on the open slice right of t)."""
    ev = S.ordered_events()
    live: set[int] = set()
    i = 0
    while i < len(ev):
        t = ev[i][0]
        j = i
        while j < len(ev) and ev[j][0] == t and ev[j][1] == 0:
            live.add(ev[j][2])
            j += 1
        at_t = frozenset(live)
        while j < len(ev) and ev[j][0] == t:
            live.discard(ev[j][2])
            j += 1
        yield t, at_t, frozenset(live)
        i = j


def slice_timeline(S: EventSequence) -> TimelineSlices:
    if not len(S):
        return TimelineSlices((), ())
    steps = list(_sweep(S))
    intervals, present = [], []
    if steps[0][0] > 0:
        intervals.append((0.0, steps[0][0]))
        present.append(frozenset())
    for (t, _, after), (t_next, _, _) in zip(steps, steps[1:]):
        intervals.append((t, t_next))
        present.append(after)
    return TimelineSlices(tuple(intervals), tuple(present))


def instant_sets(S: EventSequence) -> list[tuple[float, frozenset]]:
    """Closed-presence sets at every distinct event time."""
    return [(t, at_t) for t, at_t, _ in _sweep(S)]


# -------------------------------------------------------------- traces ----

@dataclass(frozen=True)
class TraceRecord:
    t: float
    kind: str
    id: int
    pos: Point | None
    dmin: float

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "kind": self.kind,
            "id": self.id,
            "pos": list(self.pos) if self.pos is not None else None,
            "dmin": _json_float(self.dmin),
        }


@dataclass
class PlacementTrace:
    records: list[TraceRecord] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def positions(self) -> dict[int, Point]:
        return {r.id: r.pos for r in self.records if r.kind == "arrive"}

    def lifetimes(self) -> EventSequence:
        arr, dep = {}, {}
        for r in self.records:
            if r.kind == "arrive":
                if r.id in arr:
                    raise EventError(f"point {r.id} arrives twice")
                arr[r.id] = r.t
            elif r.kind == "depart":
                if r.id not in arr or r.id in dep:
                    raise EventError(f"departure of point {r.id} without a live arrival")
                dep[r.id] = r.t
            else:
                raise EventError(f"unknown record kind {r.kind!r}")
        missing = set(arr) - set(dep)
        if missing:
            raise EventError(f"points never depart: {sorted(missing)[:5]}")
        return EventSequence.from_pairs([(arr[i], dep[i]) for i in arr], ids=list(arr))

    def write_jsonl(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            if self.meta:
                fh.write(json.dumps({"kind": "meta", **self.meta}, sort_keys=True) + "\n")
            for r in self.records:
                fh.write(json.dumps(r.to_json(), sort_keys=True) + "\n")

    @classmethod
    def read_jsonl(cls, path: str | Path) -> "PlacementTrace":
        trace = cls()
        with Path(path).open(encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                if not raw.strip():
                    continue
                try:
                    obj = json.loads(raw)
                    if obj.get("kind") == "meta":
                        trace.meta = {k: v for k, v in obj.items() if k != "kind"}
                        continue
                    pos = obj["pos"]
                    trace.records.append(
                        TraceRecord(
                            t=float(obj["t"]),
                            kind=obj["kind"],
                            id=int(obj["id"]),
                            pos=tuple(float(v) for v in pos) if pos is not None else None,
                            dmin=_parse_float(obj["dmin"]),
                        )
                    )
                except (KeyError, TypeError, ValueError) as exc:
                    raise EventError(f"{path}:{lineno}: malformed trace record ({exc})") from None
        return trace


def _json_float(v: float):
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def _parse_float(v) -> float:
    return float(v)


# ---------------------------------------------------------- objectives ----

def config_dmin(points: np.ndarray, P: Polytope, with_boundary: bool) -> float:
    """d_min of a static configuration; inf when the objective is undefined."""
    pts = np.asarray(points, dtype=float).reshape(-1, P.dim)
    if pts.shape[0] == 0:
        return INF
    if not with_boundary and pts.shape[0] < 2:
        return INF
    val = kernels.min_pairwise(pts)
    if with_boundary:
        bd = P.boundary_distances(pts)
        val = min(val, max(0.0, float(bd.min())))
    return val


def _checked_positions(trace: PlacementTrace, P: Polytope) -> dict[int, np.ndarray]:
    pos = {}
    for i, p in trace.positions().items():
        if p is None or len(p) != P.dim:
            raise EventError(f"point {i} has no valid {P.dim}-dimensional position")
        if not P.contains(p):
            raise EventError(f"point {i} placed outside the polytope at {p}")
        pos[i] = np.asarray(p, dtype=float)
    return pos


def _set_dmin(ids, pos, P, with_boundary, cache):
    key = ids
    if key not in cache:
        pts = np.array([pos[i] for i in sorted(ids)]).reshape(-1, P.dim)
        cache[key] = config_dmin(pts, P, with_boundary)
    return cache[key]


def atwc_value(trace: PlacementTrace, P: Polytope, with_boundary: bool = True) -> float:
    """Minimum d_min over time; inf when no instant has a defined d_min.

    Evaluated at every event instant with closed presence. Every open slice's
    present set is contained in the set at its left endpoint, so this also
    covers the slices.
    """
    pos = _checked_positions(trace, P)
    S = trace.lifetimes()
    cache: dict = {}
    best = INF
    for _, ids in instant_sets(S):
        best = min(best, _set_dmin(ids, pos, P, with_boundary, cache))
    return best


def slice_dmins(trace: PlacementTrace, P: Polytope, with_boundary: bool = True):
    """(slices, d_min per open slice); undefined slices get inf."""
    pos = _checked_positions(trace, P)
    sl = slice_timeline(trace.lifetimes())
    cache: dict = {}
    return sl, [_set_dmin(ids, pos, P, with_boundary, cache) for ids in sl.present]


def cd_value(trace: PlacementTrace, P: Polytope, with_boundary: bool = True) -> float:
    sl, dm = slice_dmins(trace, P, with_boundary)
    total = 0.0
    for (left, right), v in zip(sl.intervals, dm):
        if math.isfinite(v):
            total += (right - left) * v
    return total
