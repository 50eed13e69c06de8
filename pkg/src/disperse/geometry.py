"""Points, half-space polytopes, distances and the dispersion/packing conversion."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

Point = tuple[float, ...]

MEMBERSHIP_TOL = 1e-12


class GeometryError(ValueError):
    pass


def as_point(coords) -> Point:
    p = tuple(float(v) for v in np.atleast_1d(np.asarray(coords, dtype=float)))
    if not p:
        raise GeometryError("a point needs at least one coordinate")
    if not all(math.isfinite(v) for v in p):
        raise GeometryError(f"non-finite coordinate in {p}")
    return p


def distance(p: Sequence[float], q: Sequence[float]) -> float:
    if len(p) != len(q):
        raise GeometryError(f"dimension mismatch: {len(p)} vs {len(q)}")
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(p, q)))


@dataclass(frozen=True, eq=False)
class Polytope:
    """Intersection of half-spaces ``A p <= b`` with a user-supplied bounding box."""

    A: np.ndarray
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    covering_rate: float = 1.0
    insphere_radius: float | None = None
    name: str = "custom"
    _norms: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=float, ndmin=2)
        b = np.array(self.b, dtype=float).reshape(-1)
        lo = np.array(self.lo, dtype=float).reshape(-1)
        hi = np.array(self.hi, dtype=float).reshape(-1)
        k = A.shape[1]
        if A.shape[0] != b.shape[0]:
            raise GeometryError("halfspace normals and offsets differ in count")
        if lo.shape != (k,) or hi.shape != (k,):
            raise GeometryError("bounding box dimension does not match halfspaces")
        if np.any(hi <= lo):
            raise GeometryError("bounding box must have positive extent")
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms == 0):
            raise GeometryError("zero halfspace normal")
        if not (0 < self.covering_rate <= 1):
            raise GeometryError(f"covering rate must lie in (0,1], got {self.covering_rate}")
        if self.insphere_radius is not None:
            if not (0 < self.insphere_radius <= 0.5 * float(np.min(hi - lo)) + 1e-15):
                raise GeometryError("insphere radius must be in (0, half the shortest bbox edge]")
        for arr in (A, b, lo, hi, norms):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "_norms", norms)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float).reshape(-1)
        if p.shape[0] != self.dim:
            raise GeometryError(f"point has dimension {p.shape[0]}, polytope {self.dim}")
        return bool(np.all(self.A @ p <= self.b + MEMBERSHIP_TOL))

    def contains_many(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        return np.all(pts @ self.A.T <= self.b + MEMBERSHIP_TOL, axis=1)

    def boundary_distance(self, p) -> float:
        p = np.asarray(p, dtype=float).reshape(-1)
        if not self.contains(p):
            raise GeometryError(f"point {tuple(p)} lies outside the polytope")
        return max(0.0, float(np.min((self.b - self.A @ p) / self._norms)))

    def boundary_distances(self, pts) -> np.ndarray:
        """Vectorized boundary distance; rows outside P come back negative."""
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        return np.min((self.b - pts @ self.A.T) / self._norms, axis=1)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "halfspaces": [list(a) + [float(bb)] for a, bb in zip(self.A.tolist(), self.b)],
            "bbox": [self.lo.tolist(), self.hi.tolist()],
            "covering_rate": self.covering_rate,
            "insphere_radius": self.insphere_radius,
        }

    @classmethod
    def from_json(cls, data: dict, name: str = "custom") -> "Polytope":
        try:
            k = int(data["dim"])
            hs = np.array(data["halfspaces"], dtype=float, ndmin=2)
            lo, hi = data["bbox"]
        except (KeyError, TypeError, ValueError) as exc:
            raise GeometryError(f"malformed polytope description: {exc}") from exc
        if hs.shape[1] != k + 1:
            raise GeometryError(f"each halfspace needs {k + 1} numbers")
        poly = cls(
            A=hs[:, :k],
            b=hs[:, k],
            lo=lo,
            hi=hi,
            covering_rate=float(data.get("covering_rate", 1.0)),
            insphere_radius=data.get("insphere_radius"),
            name=name,
        )
        return poly

    def __repr__(self) -> str:
        return f"Polytope(name={self.name!r}, dim={self.dim}, halfspaces={len(self.b)})"


def boundary_distance(p, P: Polytope) -> float:
    return P.boundary_distance(p)


def contains(p, P: Polytope) -> bool:
    return P.contains(p)


def unit_cube(k: int, name: str | None = None) -> Polytope:
    eye = np.eye(k)
    return Polytope(
        A=np.vstack([eye, -eye]),
        b=np.concatenate([np.ones(k), np.zeros(k)]),
        lo=np.zeros(k),
        hi=np.ones(k),
        covering_rate=1.0,
        insphere_radius=0.5,
        name=name or f"cube{k}",
    )


def segment() -> Polytope:
    return unit_cube(1, "segment")


def square() -> Polytope:
    return unit_cube(2, "square")


BUILTINS = {"segment": segment, "square": square, "cube3": lambda: unit_cube(3, "cube3")}


def builtin(name: str) -> Polytope:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise GeometryError(f"unknown builtin polytope {name!r}; choose from {sorted(BUILTINS)}") from None


def load_polytope(path: str | Path) -> Polytope:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        data = json.load(fh)
    return Polytope.from_json(data, name=path.stem)


def is_unit_segment(P: Polytope) -> bool:
    return P.dim == 1 and _same_region(P, segment())


def is_unit_square(P: Polytope) -> bool:
    return P.dim == 2 and _same_region(P, square())


def _same_region(P: Polytope, Q: Polytope) -> bool:
    if not (np.allclose(P.lo, Q.lo) and np.allclose(P.hi, Q.hi)):
        return False
    # a box-shaped polytope equals its bbox iff the bbox corners are all inside
    k = P.dim
    corners = np.array(np.meshgrid(*[[0.0, 1.0]] * k, indexing="ij")).reshape(k, -1).T
    corners = P.lo + corners * (P.hi - P.lo)
    return bool(np.all(P.contains_many(corners)))


# -------------------------------------------- dispersion <-> packing radius

def disp_from_dp(dp: float, x: float) -> float:
    """Dispersion value from the dispersal-packing radius, insphere radius ``x``."""
    if dp < 0 or x <= 0:
        raise GeometryError("need dp >= 0 and x > 0")
    return 2.0 * x * dp / (x + dp)


def dp_from_disp(disp: float, x: float) -> float:
    if disp <= 0 or x <= 0:
        raise GeometryError("need disp > 0 and x > 0")
    if disp >= 2 * x:
        raise GeometryError(f"disp={disp} must stay below 2x={2 * x}")
    return x * disp / (2.0 * x - disp)
