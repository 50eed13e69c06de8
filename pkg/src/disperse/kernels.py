"""Hot loops, each in a numba flavour and a pure-numpy flavour.

The module-level functions dispatch to whichever backend ``_backend`` picked.
``get_kernels("numba" | "numpy")`` returns a specific set, which is what the
benchmark and the backend-equivalence tests use.
"""
from __future__ import annotations

from types import SimpleNamespace

import numpy as np

from . import _backend
from ._backend import njit

FOUND = 1
EXHAUSTED = 0
OVER_BUDGET = -1


# ---------------------------------------------------------------- numba ----

@njit
def _min_dist_to_set_nb(pts, p):
    best = np.inf
    k = pts.shape[1]
    for i in range(pts.shape[0]):
        acc = 0.0
        for j in range(k):
            t = pts[i, j] - p[j]
            acc += t * t
        if acc < best:
            best = acc
    return np.sqrt(best)


@njit
def _min_pairwise_nb(pts):
    best = np.inf
    n, k = pts.shape
    for a in range(n):
        for b in range(a + 1, n):
            acc = 0.0
            for j in range(k):
                t = pts[a, j] - pts[b, j]
                acc += t * t
            if acc < best:
                best = acc
    return np.sqrt(best)


@njit
def _score_candidates_nb(cands, base, pts):
    m, k = cands.shape
    out = np.empty(m)
    for c in range(m):
        best = np.inf
        for i in range(pts.shape[0]):
            acc = 0.0
            for j in range(k):
                t = cands[c, j] - pts[i, j]
                acc += t * t
            if acc < best:
                best = acc
        d = np.sqrt(best)
        out[c] = d if d < base[c] else base[c]
    return out


MAX_CELLS = 4096


@njit
def _suffix_cells_nb(cands, idx, size, h, mark, out):
    # out[t] = number of distinct cells of side h among cands[idx[t:size]].
    # A cell has diameter below the threshold, so it holds at most one chosen
    # point and out[t] bounds how many more points the suffix can supply.
    # Falls back to the plain count when the cell grid would be too fine.
    k = cands.shape[1]
    lo = np.empty(k)
    dims = np.empty(k, np.int64)
    total = 1
    for j in range(k):
        a = np.inf
        b = -np.inf
        for t in range(size):
            v = cands[idx[t], j]
            if v < a:
                a = v
            if v > b:
                b = v
        lo[j] = a
        dims[j] = int((b - a) / h) + 1
        total *= dims[j]
        if total > MAX_CELLS:
            for t in range(size):
                out[t] = size - t
            return
    count = 0
    for t in range(size - 1, -1, -1):
        cell = 0
        for j in range(k):
            q = int((cands[idx[t], j] - lo[j]) / h)
            if q >= dims[j]:
                q = dims[j] - 1
            cell = cell * dims[j] + q
        if mark[cell] == 0:
            mark[cell] = 1
            count += 1
        out[t] = count
    mark[:total] = 0


@njit
def _maximin_search_nb(cands, bd, n, thr, strict, use_bd, budget):
    # Depth-first search over index tuples i_1 < ... < i_n in lexicographic
    # order. Every list entry at depth j already clears the threshold against
    # all chosen indices, so the first complete tuple is the lex-first witness.
    m, k = cands.shape
    # shrink slightly so rounding in floor() cannot merge compatible points
    h = thr / np.sqrt(k) * (1.0 - 1e-9)
    use_cells = h > 0 and n > 1
    mark = np.zeros(MAX_CELLS + 1, np.int8)
    chosen = np.full(n, -1, np.int64)
    lists = np.empty((n, m), np.int64)
    suf = np.empty((n, m), np.int64)
    lens = np.zeros(n, np.int64)
    ptr = np.zeros(n, np.int64)
    size = 0
    for c in range(m):
        if use_bd:
            v = bd[c]
            if (strict and v > thr) or ((not strict) and v >= thr):
                lists[0, size] = c
                size += 1
        else:
            lists[0, size] = c
            size += 1
    lens[0] = size
    nodes = 0
    if size < n:
        return EXHAUSTED, chosen, nodes
    if use_cells:
        _suffix_cells_nb(cands, lists[0], size, h, mark, suf[0])
    else:
        for t in range(size):
            suf[0, t] = size - t
    level = 0
    while level >= 0:
        need = n - level
        if lens[level] - ptr[level] < need or suf[level, ptr[level]] < need:
            level -= 1
            if level >= 0:
                ptr[level] += 1
            continue
        c = lists[level, ptr[level]]
        nodes += 1
        if nodes > budget:
            return OVER_BUDGET, chosen, nodes
        chosen[level] = c
        if level == n - 1:
            return FOUND, chosen, nodes
        size = 0
        for t in range(ptr[level] + 1, lens[level]):
            e = lists[level, t]
            acc = 0.0
            for j in range(k):
                u = cands[e, j] - cands[c, j]
                acc += u * u
            d = np.sqrt(acc)
            if (strict and d > thr) or ((not strict) and d >= thr):
                lists[level + 1, size] = e
                size += 1
        if size < need - 1:
            ptr[level] += 1
            continue
        if use_cells and need - 1 > 1:
            _suffix_cells_nb(cands, lists[level + 1], size, h, mark, suf[level + 1])
            if suf[level + 1, 0] < need - 1:
                ptr[level] += 1
                continue
        else:
            for t in range(size):
                suf[level + 1, t] = size - t
        lens[level + 1] = size
        level += 1
        ptr[level] = 0
    return EXHAUSTED, chosen, nodes


# ---------------------------------------------------------------- numpy ----

def _min_dist_to_set_np(pts, p):
    if pts.shape[0] == 0:
        return np.inf
    return float(np.sqrt(np.min(np.sum((pts - p) ** 2, axis=1))))


def _min_pairwise_np(pts):
    n = pts.shape[0]
    best = np.inf
    for a in range(n - 1):
        d2 = np.min(np.sum((pts[a + 1:] - pts[a]) ** 2, axis=1))
        if d2 < best:
            best = d2
    return float(np.sqrt(best))


def _score_candidates_np(cands, base, pts, chunk=4096):
    out = np.array(base, dtype=float, copy=True)
    if pts.shape[0] == 0:
        return out
    for lo in range(0, cands.shape[0], chunk):
        block = cands[lo:lo + chunk]
        d2 = np.min(((block[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2), axis=1)
        np.minimum(out[lo:lo + chunk], np.sqrt(d2), out=out[lo:lo + chunk])
    return out


def _suffix_cells_np(pts, h):
    size = pts.shape[0]
    lo = pts.min(axis=0)
    cells = np.floor((pts - lo) / h).astype(np.int64)
    dims = cells.max(axis=0) + 1
    if np.prod(dims.astype(float)) > MAX_CELLS:
        return np.arange(size, 0, -1)
    flat = np.ravel_multi_index(cells.T, dims)
    # last occurrence of each cell; suffix t sees every cell whose last hit is >= t
    _, first_rev = np.unique(flat[::-1], return_index=True)
    last = size - 1 - first_rev
    hits = np.bincount(last, minlength=size)
    return np.cumsum(hits[::-1])[::-1]


def _maximin_search_np(cands, bd, n, thr, strict, use_bd, budget):
    def clears(v):
        return v > thr if strict else v >= thr

    h = thr / np.sqrt(cands.shape[1]) * (1.0 - 1e-9)
    use_cells = h > 0 and n > 1

    def suffix(lst, need):
        if use_cells and need > 1:
            return _suffix_cells_np(cands[lst], h)
        return np.arange(lst.size, 0, -1)

    chosen = np.full(n, -1, np.int64)
    if use_bd:
        first = np.flatnonzero(clears(bd))
    else:
        first = np.arange(cands.shape[0])
    if first.size < n:
        return EXHAUSTED, chosen, 0
    lists = [first]
    sufs = [suffix(first, n)]
    ptr = [0]
    nodes = 0
    level = 0
    while level >= 0:
        cur = lists[level]
        need = n - level
        if cur.size - ptr[level] < need or sufs[level][ptr[level]] < need:
            lists.pop()
            sufs.pop()
            ptr.pop()
            level -= 1
            if level >= 0:
                ptr[level] += 1
            continue
        c = cur[ptr[level]]
        nodes += 1
        if nodes > budget:
            return OVER_BUDGET, chosen, nodes
        chosen[level] = c
        if level == n - 1:
            return FOUND, chosen, nodes
        rest = cur[ptr[level] + 1:]
        d = np.sqrt(np.sum((cands[rest] - cands[c]) ** 2, axis=1))
        nxt = rest[clears(d)]
        if nxt.size < need - 1:
            ptr[level] += 1
            continue
        sf = suffix(nxt, need - 1)
        if sf[0] < need - 1:
            ptr[level] += 1
            continue
        lists.append(nxt)
        sufs.append(sf)
        ptr.append(0)
        level += 1
    return EXHAUSTED, chosen, nodes


# ------------------------------------------------------------- dispatch ----

_SETS = {
    "numba": SimpleNamespace(
        name="numba",
        min_dist_to_set=_min_dist_to_set_nb,
        min_pairwise=_min_pairwise_nb,
        score_candidates=_score_candidates_nb,
        maximin_search=_maximin_search_nb,
    ),
    "numpy": SimpleNamespace(
        name="numpy",
        min_dist_to_set=_min_dist_to_set_np,
        min_pairwise=_min_pairwise_np,
        score_candidates=_score_candidates_np,
        maximin_search=_maximin_search_np,
    ),
}


def get_kernels(name: str | None = None) -> SimpleNamespace:
    if name is None:
        name = _backend.backend_name()
    if name == "numba" and not _backend.NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not installed")
    return _SETS[name]


def _as2d(pts) -> np.ndarray:
    a = np.ascontiguousarray(pts, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    return a


def min_dist_to_set(pts, p) -> float:
    """Smallest Euclidean distance from ``p`` to the rows of ``pts`` (inf if empty)."""
    pts = _as2d(pts)
    if pts.shape[0] == 0:
        return float("inf")
    p = np.ascontiguousarray(p, dtype=np.float64).reshape(-1)
    return float(get_kernels().min_dist_to_set(pts, p))


def min_pairwise(pts) -> float:
    """Smallest pairwise distance among the rows of ``pts`` (inf for < 2 rows)."""
    pts = _as2d(pts)
    if pts.shape[0] < 2:
        return float("inf")
    return float(get_kernels().min_pairwise(pts))


def score_candidates(cands, base, pts) -> np.ndarray:
    """``min(base[c], distance from cands[c] to pts)`` for every candidate row."""
    cands = _as2d(cands)
    base = np.ascontiguousarray(base, dtype=np.float64)
    pts = _as2d(pts).reshape(-1, cands.shape[1])
    return np.asarray(get_kernels().score_candidates(cands, base, pts))


def maximin_search(cands, bd, n, thr, strict, use_bd, budget):
    """Lex-first n-subset of candidate rows whose value clears ``thr``.

    Returns ``(status, indices, nodes)`` with status FOUND, EXHAUSTED or
    OVER_BUDGET.
    """
    cands = _as2d(cands)
    bd = np.ascontiguousarray(bd, dtype=np.float64)
    status, idx, nodes = get_kernels().maximin_search(
        cands, bd, int(n), float(thr), bool(strict), bool(use_bd), int(budget)
    )
    return int(status), np.array(idx, dtype=np.int64), int(nodes)
