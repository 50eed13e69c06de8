"""Offline cumulative-distance placement built on any online worst-case algorithm.

Points are split into groups with pairwise disjoint lifetimes, two groups per
sliding-window pass. Each group then shares one position, taken from a run of
the online algorithm on a synthetic sequence with two arrivals per pass.
"""
from __future__ import annotations

from dataclasses import dataclass

from .bounds import disp_reference
from .events import EventSequence, PlacementTrace, max_simultaneous, slice_timeline
from .geometry import Point, Polytope
from .online import OnlineAlgorithm, replay, simulate


@dataclass(frozen=True)
class SelectionPair:
    I1: tuple[int, ...]
    I2: tuple[int, ...]


@dataclass(frozen=True)
class GroupAssignment:
    groups: tuple[tuple[int, ...], ...]
    positions: tuple[Point, ...]
    passes: int

    def group_of(self) -> dict[int, int]:
        return {pid: j for j, g in enumerate(self.groups) for pid in g}


def select_pair(S: EventSequence) -> SelectionPair:
    """Two id groups, each with disjoint lifetimes, jointly covering every
    instant at which some point of S is present."""
    if not len(S):
        raise ValueError("select_pair needs a non-empty sequence")
    pts = S.points  # sorted by arrival
    T = S.horizon
    chosen: dict[int, list[int]] = {1: [], 2: []}
    hi = 0.0
    index = 1
    k = 0
    for _ in range(2 * len(pts) + 2):
        if hi >= T:
            break
        # windows tile the time axis, so arrivals in (lo, hi] are the next run of pts
        start = k
        while k < len(pts) and pts[k].s <= hi:
            k += 1
        window = [p for p in pts[start:k] if p.d > hi]
        if window:
            j = max(window, key=lambda p: (p.d, -p.id))
            chosen[index].append(j.id)
            hi = j.d
        else:
            if k == len(pts):
                raise RuntimeError(f"selection window stalled at t={hi} before the horizon {T}")
            hi = pts[k].s
        index = 3 - index
    else:
        raise RuntimeError("selection did not reach the horizon")
    return SelectionPair(tuple(chosen[1]), tuple(chosen[2]))


def partition_groups(S: EventSequence) -> list[tuple[int, ...]]:
    """Repeated selection on the residual sequence; always an even number of groups."""
    groups: list[tuple[int, ...]] = []
    residual = S
    limit = max_simultaneous(S)
    while len(residual):
        pair = select_pair(residual)
        groups += [pair.I1, pair.I2]
        taken = set(pair.I1) | set(pair.I2)
        residual = EventSequence(tuple(p for p in residual.points if p.id not in taken))
        if len(groups) // 2 > limit:
            raise RuntimeError(f"partition needed more than m={limit} passes")
    return groups


def synthetic_sequence(passes: int) -> EventSequence:
    pairs = [(float(i), float(passes)) for i in range(passes) for _ in range(2)]
    return EventSequence.from_pairs(pairs)


def run_acd(S: EventSequence, atwc: OnlineAlgorithm, P: Polytope | None = None):
    """Returns (GroupAssignment, PlacementTrace on the real timeline)."""
    P = P or atwc.polytope
    groups = partition_groups(S)
    r = len(groups) // 2
    feed = simulate(synthetic_sequence(r), atwc)
    where = feed.positions()
    positions = tuple(where[j] for j in range(1, 2 * r + 1))
    placement = {pid: positions[j] for j, g in enumerate(groups) for pid in g}
    trace = replay(S, placement, P, atwc.with_boundary,
                   meta={"algorithm": f"acd[{atwc.name}]", "params": atwc.params()})
    return GroupAssignment(tuple(groups), positions, r), trace


def cd_reference(S: EventSequence, P: Polytope):
    """(bound, kind, rows): per-slice table of (left, right, n, reference)."""
    rows = []
    total = 0.0
    kinds = set()
    sl = slice_timeline(S)
    for (left, right), ids in zip(sl.intervals, sl.present):
        n = len(ids)
        if n == 0:
            rows.append((left, right, 0, 0.0))
            continue
        ref, kind = disp_reference(n, P)
        kinds.add(kind)
        total += (right - left) * ref
        rows.append((left, right, n, ref))
    kind = "exact" if kinds <= {"exact"} else "upper"
    return total, kind, rows


def cd_upper_bound(S: EventSequence, P: Polytope) -> float:
    return cd_reference(S, P)[0]
