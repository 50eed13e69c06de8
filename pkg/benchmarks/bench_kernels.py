"""Time the numba kernels against their numpy fallbacks on fixed inputs.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each row runs the same call on both backends and checks the results agree.
The first numba call compiles (or loads the on-disk cache) and is excluded.
"""
import argparse
import json
import sys
import time

import numpy as np

from disperse import kernels
from disperse._backend import NUMBA_AVAILABLE
from disperse.bounds import grid_candidates
from disperse.geometry import square


def _cases():
    rng = np.random.default_rng(0)
    pts2k = rng.random((2000, 2))
    cands = rng.random((20000, 2))
    base = rng.random(20000)
    P = square()
    grid = grid_candidates(P, 41)
    bd = np.maximum(P.boundary_distances(grid), 0.0)
    return [
        ("min_dist_to_set  n=2000", "min_dist_to_set", (pts2k, pts2k[0] + 1e-3)),
        ("min_pairwise     n=2000", "min_pairwise", (pts2k,)),
        ("score_candidates 20000x200", "score_candidates", (cands, base, pts2k[:200])),
        # just above the grid optimum, so the search must exhaust
        ("maximin_search   n=6 grid 41 (infeasible)", "maximin_search", (grid, bd, 6, 0.2705, True, True, 10**8)),
    ]


def _time(fn, args, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=1e-12, atol=0)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json")
    args = ap.parse_args(argv)
    if not NUMBA_AVAILABLE:
        print("numba is not installed; only the numpy backend can run", file=sys.stderr)
        return 1
    nb, npk = kernels.get_kernels("numba"), kernels.get_kernels("numpy")
    rows = []
    print(f"{'kernel':40s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}  agree")
    for label, name, call in _cases():
        f_nb, f_np = getattr(nb, name), getattr(npk, name)
        f_nb(*call)  # compile / load cache
        t_nb, r_nb = _time(f_nb, call, args.repeat)
        t_np, r_np = _time(f_np, call, max(1, args.repeat // 2))
        agree = _same(r_nb, r_np)
        rows.append({"kernel": label, "numba_s": t_nb, "numpy_s": t_np, "agree": bool(agree)})
        print(f"{label:40s} {t_nb:10.5f} {t_np:10.5f} {t_np / t_nb:8.1f}x  {agree}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
            fh.write("\n")
    return 0 if all(r["agree"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
