"""Instance generators: fixed lower-bound constructions, seeded random families,
and an adaptive adversary for the cumulative objective."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .events import EventSequence, PlacementTrace
from .geometry import distance
from .online import OnlineAlgorithm, replay

FAMILIES = ("sequential", "three_stage", "random", "insert_only_random", "adaptive_cd")


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")


def _need(value: int, least: int, what: str) -> int:
    if int(value) != value or value < least:
        raise ValueError(f"{what} must be an integer >= {least}, got {value}")
    return int(value)


def gen_sequential(n: int) -> EventSequence:
    n = _need(n, 1, "n")
    return EventSequence.from_pairs([(i, n + 1) for i in range(1, n + 1)])


def gen_three_stage(r: int) -> EventSequence:
    """r-1 simultaneous arrivals at 0, then r single arrivals; nobody leaves early."""
    r = _need(r, 2, "r")
    pairs = [(0.0, r + 1.0)] * (r - 1) + [(float(t), r + 1.0) for t in range(1, r + 1)]
    return EventSequence.from_pairs(pairs)


def gen_random(n: int, seed: int = 0, horizon: float = 10.0) -> EventSequence:
    n = _need(n, 1, "n")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    rng = np.random.default_rng(seed)
    s = rng.uniform(0.0, horizon, size=n)
    # 1 - U lies in (0, 1], so every departure is strictly after its arrival
    d = s + (horizon - s) * (1.0 - rng.random(n))
    d = np.where(d > s, d, np.nextafter(s, np.inf))
    order = np.argsort(s, kind="stable")
    return EventSequence.from_pairs(zip(s[order].tolist(), d[order].tolist()))


def gen_insert_only_random(n: int, seed: int = 0, horizon: float = 10.0) -> EventSequence:
    n = _need(n, 1, "n")
    rng = np.random.default_rng(seed)
    s = np.sort(rng.uniform(0.0, horizon, size=n))
    return EventSequence.from_pairs([(float(v), float(horizon) + 1.0) for v in s])


def generate(spec: GeneratorSpec) -> EventSequence:
    p = spec.params
    if spec.family == "sequential":
        return gen_sequential(p["n"])
    if spec.family == "three_stage":
        return gen_three_stage(p["r"])
    if spec.family == "random":
        return gen_random(p["n"], p.get("seed", 0), p.get("horizon", 10.0))
    if spec.family == "insert_only_random":
        return gen_insert_only_random(p["n"], p.get("seed", 0), p.get("horizon", 10.0))
    raise ValueError("adaptive_cd depends on the algorithm; use adaptive_cd_adversary")


def adaptive_cd_adversary(algo: OnlineAlgorithm, n: int, T: float = 1000.0):
    """n arrivals at 0; the closest pair (or the point nearest the boundary) stays
    until T while everyone else leaves at 1. Returns (sequence, trace)."""
    n = _need(n, 2, "n")
    if not T > 1:
        raise ValueError("T must exceed 1")
    P = algo.polytope
    placed = {pid: algo.on_arrive(pid) for pid in range(1, n + 1)}
    pair_d, pair = np.inf, (1, 2)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            dij = distance(placed[i], placed[j])
            if dij < pair_d:
                pair_d, pair = dij, (i, j)
    keep = set(pair)
    if algo.with_boundary:
        bd = {pid: P.boundary_distance(p) for pid, p in placed.items()}
        single = min(bd, key=lambda pid: (bd[pid], pid))
        if bd[single] * (1 + 1e-12) < pair_d:
            keep = {single}
    pairs = [(0.0, float(T) if pid in keep else 1.0) for pid in range(1, n + 1)]
    seq = EventSequence.from_pairs(pairs)
    for pid in range(1, n + 1):
        if pid not in keep:
            algo.on_depart(pid)
    for pid in keep:
        algo.on_depart(pid)
    trace = replay(seq, placed, P, algo.with_boundary,
                   meta={"algorithm": algo.name, "params": algo.params(), "adversary": "adaptive_cd"})
    return seq, trace
