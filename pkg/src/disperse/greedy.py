"""Grid-search greedy placement for k-dimensional polytopes, and the exact
largest-gap greedy for the segment."""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .bounds import disp_kd_lower
from .geometry import GeometryError, Point, Polytope, segment
from .online import OnlineAlgorithm


@dataclass(frozen=True)
class GreedyConfig:
    epsilon: float = 0.1
    gamma: float = 1.0
    with_boundary: bool = True

    def __post_init__(self):
        if not (0 < self.epsilon < 1):
            raise ValueError(f"epsilon must lie in (0,1), got {self.epsilon}")
        if not (0 < self.gamma <= 1):
            raise ValueError(f"gamma must lie in (0,1], got {self.gamma}")


def grid_slices(n: int, k: int, cfg: GreedyConfig) -> int:
    """Cubes per axis when n positions already exist."""
    if cfg.with_boundary:
        n = max(n, 1)
        return math.ceil(math.sqrt(k) * (n ** (1.0 / k) + 2) / (cfg.gamma * cfg.epsilon))
    # the returned point may sit anywhere in its cube, so the cube diagonal
    # must stay below eps * Disp(n+1)/2 rather than eps * Disp(n)
    return math.ceil(2 * math.sqrt(k) * ((n + 1) ** (1.0 / k) + 2) / (cfg.gamma * cfg.epsilon))


@dataclass(frozen=True)
class UnitCubeMap:
    """p = origin + scale * u, taking the unit cube onto the bounding cube of P."""

    origin: np.ndarray
    scale: float

    @classmethod
    def for_polytope(cls, P: Polytope) -> "UnitCubeMap":
        return cls(np.array(P.lo, dtype=float), float(np.max(P.hi - P.lo)))

    def to_world(self, u: np.ndarray) -> np.ndarray:
        return self.origin + self.scale * np.asarray(u, dtype=float)


class _CandidateGrid:
    """Cube centres (or in-P probe points) for one slice count m, lex-ordered."""

    def __init__(self, P: Polytope, cmap: UnitCubeMap, m: int, with_boundary: bool):
        k = P.dim
        axis = (np.arange(m) + 0.5) / m
        mesh = np.meshgrid(*[axis] * k, indexing="ij")
        centres = cmap.to_world(np.stack([g.reshape(-1) for g in mesh], axis=1))
        if with_boundary:
            inside = P.contains_many(centres)
            self.score_at = np.ascontiguousarray(centres[inside])
            self.output = self.score_at
            self.base = np.maximum(P.boundary_distances(self.score_at), 0.0)
        else:
            half = cmap.scale * 0.5 / m
            rep = np.full(centres.shape, np.nan)
            found = P.contains_many(centres)
            rep[found] = centres[found]
            for signs in itertools.product((-1.0, 1.0), repeat=k):
                corner = centres + half * np.array(signs)
                hit = ~found & P.contains_many(corner)
                rep[hit] = corner[hit]
                found |= hit
            self.score_at = np.ascontiguousarray(centres[found])
            self.output = np.ascontiguousarray(rep[found])
            self.base = np.full(len(self.score_at), np.inf)
        if len(self.score_at) == 0:
            raise GeometryError(
                f"no grid cube of the {m}^{k} grid meets the polytope; the covering rate is overstated"
            )


class GreedySearch:
    def __init__(self, P: Polytope, cfg: GreedyConfig):
        if P.dim < 2:
            raise GeometryError("grid-search greedy needs dimension k >= 2; use line-greedy on the segment")
        self.P = P
        self.cfg = cfg
        self.cmap = UnitCubeMap.for_polytope(P)
        self._grids: dict[int, _CandidateGrid] = {}

    def grid(self, m: int) -> _CandidateGrid:
        if m not in self._grids:
            self._grids = {m: _CandidateGrid(self.P, self.cmap, m, self.cfg.with_boundary)}
        return self._grids[m]

    def next_point(self, existing) -> Point:
        pts = np.asarray(existing, dtype=float).reshape(-1, self.P.dim)
        g = self.grid(grid_slices(len(pts), self.P.dim, self.cfg))
        scores = kernels.score_candidates(g.score_at, g.base, pts)
        best = np.max(scores)
        pick = int(np.flatnonzero(scores == best)[0])
        return tuple(float(v) for v in g.output[pick])

    def certificate(self, n_created: int) -> float:
        """Distance every configuration of up to n_created positions keeps."""
        k = self.P.dim
        return (1 - self.cfg.epsilon) / 2 * disp_kd_lower(max(n_created, 1), k, self.cfg.gamma) * self.cmap.scale


def greedy_next(existing, P: Polytope, cfg: GreedyConfig) -> Point:
    return GreedySearch(P, cfg).next_point(existing)


class GreedyAlgorithm(OnlineAlgorithm):
    name = "greedy"

    def __init__(self, polytope: Polytope, epsilon: float = 0.1, gamma: float | None = None,
                 with_boundary: bool = True):
        super().__init__(polytope)
        self.cfg = GreedyConfig(epsilon, polytope.covering_rate if gamma is None else gamma, with_boundary)
        self.with_boundary = with_boundary
        self.search = GreedySearch(polytope, self.cfg)

    def create_position(self) -> Point:
        return self.search.next_point(self.registry.positions)

    def params(self) -> dict:
        return {"epsilon": self.cfg.epsilon, "gamma": self.cfg.gamma, "with_boundary": self.cfg.with_boundary}

    def guarantee(self) -> float:
        return 2.0 / (1.0 - self.cfg.epsilon)


class SegmentGreedy(OnlineAlgorithm):
    """Midpoint of the largest gap among 0, the positions and 1 (leftmost on ties)."""

    name = "line-greedy"

    def __init__(self, polytope: Polytope | None = None, with_boundary: bool = True):
        super().__init__(polytope or segment())
        self.with_boundary = with_boundary
        self.exact_positions: list[Fraction] = []
        self._gaps = [(-Fraction(1), Fraction(0), Fraction(1))]

    def vacancy_key(self, pos: Point) -> tuple:
        return (pos[0],)

    def create_position(self) -> Point:
        n = len(self.exact_positions)
        if not self.with_boundary and n < 2:
            # without the boundary term the endpoints come first
            f = Fraction(n)
        else:
            _, a, b = heapq.heappop(self._gaps)
            f = (a + b) / 2
            heapq.heappush(self._gaps, (-(f - a), a, f))
            heapq.heappush(self._gaps, (-(b - f), f, b))
        self.exact_positions.append(f)
        return (float(f),)

    def guarantee(self) -> float:
        return 2.0
