"""Reference optima and bounds, plus an exact grid maximin oracle for small n."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import kernels
from .geometry import GeometryError, Point, Polytope, is_unit_segment, is_unit_square

DEFAULT_ORACLE_BUDGET = 10**8
# values closer than this are ties; keeps float noise in grid coordinates
# (1 - 0.71 vs 0.29) from breaking the symmetry the pruning relies on
ORACLE_TIE_TOL = 1e-12

# first-of-group exact values for the unit square; each holds for its whole group
_SQUARE_GROUPS = (
    (1, 1, 0.5),
    (2, 4, 0.36940),
    (5, 5, 0.29290),
    (6, 7, 0.27292),
    (8, 8, 0.25434),
    (9, 17, 0.25),
    (18, 36, 0.18769),
)
SQUARE_GROUP_STARTS = tuple(g[0] for g in _SQUARE_GROUPS)


class OracleBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class DispBound:
    n: int
    lower: float
    upper: float
    exact: float | None = None


def _check_n(n: int) -> None:
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")


def disp_segment(n: int) -> float:
    _check_n(n)
    return 1.0 / (n + 1)


def disp_square_exact_small(n: int) -> float | None:
    _check_n(n)
    for lo, hi, v in _SQUARE_GROUPS:
        if lo <= n <= hi:
            return v
    return None


def square_lower(n: int) -> float:
    return 2.0 / (5.0 + math.sqrt(2.0 * math.sqrt(3.0) * n))


def square_upper(n: int) -> float:
    return 2.0 / (2.0 + math.sqrt(2.0 * math.sqrt(3.0) * n))


def disp_square_bounds(n: int) -> DispBound:
    """Packing-based bounds; ``exact`` only where the table value is the true Disp(n)."""
    _check_n(n)
    exact = disp_square_exact_small(n) if n in SQUARE_GROUP_STARTS else None
    return DispBound(n, square_lower(n), square_upper(n), exact)


def disp_kd_lower(n: int, k: int, gamma: float) -> float:
    _check_n(n)
    if int(k) != k or k < 1:
        raise ValueError(f"dimension must be a positive integer, got {k}")
    if not (0 < gamma <= 1):
        raise ValueError(f"covering rate must lie in (0,1], got {gamma}")
    return gamma / (n ** (1.0 / k) + 2.0)


def volume_upper(n: int, P: Polytope) -> float:
    """Generic upper bound: n disjoint balls of radius v/2 fit inside the bbox of P,
    and v cannot exceed half the shortest bbox edge."""
    _check_n(n)
    k = P.dim
    edges = P.hi - P.lo
    unit_ball = math.pi ** (k / 2) / math.gamma(k / 2 + 1)
    vol_bound = 2.0 * (float(np.prod(edges)) / (n * unit_ball)) ** (1.0 / k)
    return min(0.5 * float(edges.min()), vol_bound)


def disp_reference(n: int, P: Polytope) -> tuple[float, str]:
    """Best available upper reference for Disp(n; P) and whether it is exact."""
    _check_n(n)
    if is_unit_segment(P):
        return disp_segment(n), "exact"
    if is_unit_square(P):
        if n <= 36:
            # group value; exact at the group start, a valid upper reference after it
            return disp_square_exact_small(n), "exact" if n in SQUARE_GROUP_STARTS else "table"
        return square_upper(n), "upper"
    return volume_upper(n, P), "upper"


# ------------------------------------------------------------------ oracle

def oracle_budget(override: int | None = None) -> int:
    if override is not None:
        return int(override)
    env = os.environ.get("DISPERSE_ORACLE_BUDGET")
    return int(float(env)) if env else DEFAULT_ORACLE_BUDGET


def grid_candidates(P: Polytope, grid_res: int) -> np.ndarray:
    """Grid points of the bbox lying in P, in lexicographic coordinate order."""
    if grid_res < 2:
        raise ValueError("grid_res must be at least 2")
    axes = [np.linspace(P.lo[j], P.hi[j], grid_res) for j in range(P.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
    return np.ascontiguousarray(pts[P.contains_many(pts)])


def _tuple_value(cands, bd, idx, use_bd) -> float:
    pts = cands[idx]
    v = kernels.min_pairwise(pts)
    if use_bd:
        v = min(v, float(bd[idx].min()))
    return v


def _seed_tuple(cands, bd, n, use_bd) -> np.ndarray:
    """Farthest-point heuristic, only used to start the value search."""
    score = bd.copy() if use_bd else np.full(len(cands), np.inf)
    chosen = []
    for _ in range(n):
        if chosen:
            score = kernels.score_candidates(cands, score, cands[chosen[-1:]])
        pick = int(np.argmax(score)) if chosen or use_bd else 0
        chosen.append(pick)
        score[pick] = -np.inf
    return np.array(sorted(chosen), dtype=np.int64)


def brute_force_disp(n: int, P: Polytope, with_boundary: bool = True, grid_res: int = 101,
                     budget: int | None = None) -> tuple[float, list[Point]]:
    """Exact maximin over n-subsets of the grid candidates in P.

    The optimum value is pinned down by bisection on a threshold, each step a
    pruned depth-first search; the witness is then the lexicographically first
    subset reaching that value. Search nodes across all steps count against
    ``budget``.
    """
    _check_n(n)
    if P.dim not in (1, 2):
        raise ValueError("the oracle supports dimension 1 or 2 only")
    if not with_boundary and n < 2:
        raise ValueError("without the boundary term the objective needs n >= 2")
    cands = grid_candidates(P, grid_res)
    if len(cands) < n:
        raise GeometryError(f"only {len(cands)} grid candidates lie in the polytope")
    bd = np.maximum(P.boundary_distances(cands), 0.0)
    use_bd = bool(with_boundary)
    limit = oracle_budget(budget)
    spent = 0

    def search(thr, strict):
        nonlocal spent
        thr = thr + ORACLE_TIE_TOL if strict else thr - ORACLE_TIE_TOL
        status, idx, nodes = kernels.maximin_search(cands, bd, n, thr, strict, use_bd, limit - spent)
        spent += nodes
        if status == kernels.OVER_BUDGET:
            raise OracleBudgetExceeded(f"oracle exceeded {limit} search nodes (n={n}, grid_res={grid_res})")
        return idx if status == kernels.FOUND else None

    lo = _tuple_value(cands, bd, _seed_tuple(cands, bd, n, use_bd), use_bd)
    if use_bd:
        hi = float(bd.max())
    else:
        hi = float(np.linalg.norm(P.hi - P.lo))
    while hi - lo > 1e-12 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        idx = search(mid, True)
        if idx is None:
            hi = mid
        else:
            lo = _tuple_value(cands, bd, idx, use_bd)
    while True:
        idx = search(lo, True)
        if idx is None:
            break
        lo = _tuple_value(cands, bd, idx, use_bd)
    idx = search(lo, False)
    assert idx is not None
    return lo, [tuple(float(v) for v in cands[i]) for i in idx]
