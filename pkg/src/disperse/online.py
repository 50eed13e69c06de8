"""Position registry shared by the online algorithms, plus the event driver."""
from __future__ import annotations

import heapq
from typing import Callable

import numpy as np

from . import kernels
from .events import EventSequence, PlacementTrace, TraceRecord, config_dmin, INF
from .geometry import Point, Polytope


class RegistryError(KeyError):
    pass


class PositionRegistry:
    """Every position ever created, each either occupied by a point id or vacant.

    Positions are never removed. Vacant ones are handed out smallest-key first.
    """

    def __init__(self, key: Callable[[Point], tuple] = tuple):
        self._key = key
        self.positions: list[Point] = []
        self.occupant: list[int | None] = []
        self._slot_of: dict[int, int] = {}
        self._vacant: list[tuple[tuple, int]] = []

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def n_occupied(self) -> int:
        return len(self._slot_of)

    @property
    def n_vacant(self) -> int:
        return len(self._vacant)

    def is_present(self, pid: int) -> bool:
        return pid in self._slot_of

    def position_of(self, pid: int) -> Point:
        return self.positions[self._slot_of[pid]]

    def take_vacant(self, pid: int) -> Point | None:
        if pid in self._slot_of:
            raise RegistryError(f"point {pid} is already present")
        if not self._vacant:
            return None
        _, slot = heapq.heappop(self._vacant)
        self.occupant[slot] = pid
        self._slot_of[pid] = slot
        return self.positions[slot]

    def add(self, pos: Point, pid: int) -> Point:
        if pid in self._slot_of:
            raise RegistryError(f"point {pid} is already present")
        self.positions.append(pos)
        self.occupant.append(pid)
        self._slot_of[pid] = len(self.positions) - 1
        return pos

    def release(self, pid: int) -> Point:
        try:
            slot = self._slot_of.pop(pid)
        except KeyError:
            raise RegistryError(f"point {pid} is not present") from None
        self.occupant[slot] = None
        heapq.heappush(self._vacant, (self._key(self.positions[slot]), slot))
        return self.positions[slot]


class OnlineAlgorithm:
    """Arrive/depart state machine: reuse a vacant position, else create one."""

    name = "abstract"
    with_boundary = True

    def __init__(self, polytope: Polytope):
        self.polytope = polytope
        self.registry = PositionRegistry(self.vacancy_key)

    def vacancy_key(self, pos: Point) -> tuple:
        return tuple(pos)

    def create_position(self) -> Point:
        raise NotImplementedError

    def on_arrive(self, pid: int) -> Point:
        pos = self.registry.take_vacant(pid)
        if pos is None:
            if self.registry.is_present(pid):
                raise RegistryError(f"point {pid} is already present")
            pos = self.registry.add(self.create_position(), pid)
        return pos

    def on_depart(self, pid: int) -> None:
        self.registry.release(pid)

    def params(self) -> dict:
        return {}

    def guarantee(self) -> float | None:
        """Proven competitive-ratio ceiling, if the algorithm has one."""
        return None

    # whether the ceiling is proven against the upper-bound reference too
    ceiling_vs_upper = False


class _LiveSet:
    """Present positions in one contiguous buffer; removal swaps in the last row."""

    def __init__(self, k: int):
        self.buf = np.empty((16, k))
        self.ids: list[int] = []
        self.row: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def points(self) -> np.ndarray:
        return self.buf[: len(self.ids)]

    def add(self, pid: int, arr: np.ndarray) -> None:
        n = len(self.ids)
        if n == len(self.buf):
            self.buf = np.concatenate([self.buf, np.empty_like(self.buf)])
        self.buf[n] = arr
        self.row[pid] = n
        self.ids.append(pid)

    def remove(self, pid: int) -> None:
        r = self.row.pop(pid)
        last = self.ids.pop()
        if last != pid:
            self.buf[r] = self.buf[len(self.ids)]
            self.ids[r] = last
            self.row[last] = r


def simulate(seq: EventSequence, algo: OnlineAlgorithm) -> PlacementTrace:
    """Drive ``algo`` through ``seq``; arrivals precede departures at equal times."""
    P = algo.polytope
    flag = algo.with_boundary
    records: list[TraceRecord] = []
    live = _LiveSet(P.dim)
    cur = INF
    events = seq.ordered_events()
    i = 0
    while i < len(events):
        t, kind, _ = events[i]
        j = i
        while j < len(events) and events[j][0] == t and events[j][1] == kind:
            j += 1
        batch = events[i:j]
        if kind == 0:
            for _, _, pid in batch:
                pos = algo.on_arrive(pid)
                arr = np.asarray(pos, dtype=float)
                if len(live):
                    cur = min(cur, kernels.min_dist_to_set(live.points, arr))
                if flag:
                    cur = min(cur, P.boundary_distance(arr))
                live.add(pid, arr)
                records.append(TraceRecord(t, "arrive", pid, tuple(pos), _defined(cur, len(live), flag)))
        else:
            for _, _, pid in batch:
                algo.on_depart(pid)
                live.remove(pid)
            cur = config_dmin(live.points, P, flag) if len(live) else INF
            for _, _, pid in batch:
                records.append(TraceRecord(t, "depart", pid, None, _defined(cur, len(live), flag)))
        i = j
    return PlacementTrace(records, meta={"algorithm": algo.name, "params": algo.params(),
                                         "polytope": P.to_json(), "with_boundary": flag})


def _defined(cur: float, n_live: int, flag: bool) -> float:
    if not flag and n_live < 2:
        return INF
    return cur


def replay(seq: EventSequence, placement: dict[int, Point], P: Polytope,
           with_boundary: bool = True, meta: dict | None = None) -> PlacementTrace:
    """Trace for a fixed id -> position assignment (offline placements)."""

    class _Fixed(OnlineAlgorithm):
        name = "fixed"

        def on_arrive(self, pid):
            return placement[pid]

        def on_depart(self, pid):
            pass

    algo = _Fixed(P)
    algo.with_boundary = with_boundary
    trace = simulate(seq, algo)
    trace.meta = dict(meta or {}, polytope=P.to_json(), with_boundary=with_boundary)
    return trace
