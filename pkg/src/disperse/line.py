"""Online placement on the unit segment.

``LineAlgorithm`` pre-fixes r = 2^l - 1 positions whose gaps shrink
harmonically, hands them out in binary (breadth-first) order, and once they are
used up splits the largest gap at its midpoint. All positions are exact
rationals internally, so gap comparisons and tie-breaks are exact.

``ExactLineAlgorithm`` is the irrational variant with logarithmic positions and
ratio tending to 2 ln 2.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction

from .geometry import Point, Polytope, segment
from .online import OnlineAlgorithm


@dataclass(frozen=True)
class HarmonicConfig:
    l: int
    r: int
    sigma: Fraction
    q: tuple[Fraction, ...]
    tau_index: tuple[int, ...]  # 1-based indices into q, in hand-out order

    @property
    def sigma_r(self) -> float:
        return float(self.sigma)

    @property
    def tau(self) -> tuple[Fraction, ...]:
        return tuple(self.q[i - 1] for i in self.tau_index)

    @property
    def guarantee(self) -> float:
        return float(2 * self.sigma)


def _split(d: int) -> tuple[int, int]:
    """d = 2^i + s with 0 <= s < 2^i."""
    if d < 1:
        raise ValueError(f"index must be >= 1, got {d}")
    i = d.bit_length() - 1
    return i, d - (1 << i)


def harmonic_sum(lo: int, hi: int) -> Fraction:
    return sum((Fraction(1, j) for j in range(lo, hi + 1)), Fraction(0))


def build_harmonic_config(l: int) -> HarmonicConfig:
    if int(l) != l or l < 1:
        raise ValueError(f"l must be a positive integer, got {l}")
    r = 2**l - 1
    sigma = harmonic_sum(r + 1, 2 * r + 1)
    q = []
    acc = Fraction(0)
    for i in range(1, r + 1):
        acc += Fraction(1, r + i)
        q.append(acc / sigma)
    tau_index = []
    for d in range(1, r + 1):
        i, s = _split(d)
        tau_index.append(2 ** (l - i - 1) * (2 * s + 1))
    return HarmonicConfig(l, r, sigma, tuple(q), tuple(tau_index))


def epsilon_to_l(eps: float) -> int:
    """Smallest l whose ratio 2*sigma_r is within eps of 2 ln 2 (by the tail bound)."""
    if not (0 < eps):
        raise ValueError("epsilon must be positive")
    return max(1, math.ceil(math.log2(2.0 / eps + 1.0) - 1.0))


def predicted_dmin_exact(m: int, cfg: HarmonicConfig) -> Fraction:
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    r, l = cfg.r, cfg.l
    if m <= r:
        i, s = _split(m)
        step = 2 ** (l - i - 1)
        return harmonic_sum(r + 1 + step * (2 * s + 1), r + step * (2 * s + 2)) / cfg.sigma
    L = 0
    while 2 ** (L + 1) * (r + 1) <= m:
        L += 1
    i = (m - 2**L * (r + 1)) // 2**L + 1
    return 1 / (2 ** (L + 1) * cfg.sigma * (r + i))


def predicted_dmin(m: int, cfg: HarmonicConfig) -> float:
    """Minimum spacing after m sequential arrivals, boundary included."""
    return float(predicted_dmin_exact(m, cfg))


def worst_small_ratio(cfg: HarmonicConfig) -> float:
    """Largest ratio reached while only pre-fixed positions are in use."""
    return float((2 - Fraction(1, 2**cfg.l)) * cfg.sigma)


class LineAlgorithm(OnlineAlgorithm):
    name = "line"

    def __init__(self, l: int = 3, polytope: Polytope | None = None):
        super().__init__(polytope or segment())
        self.cfg = build_harmonic_config(l)
        self.exact_positions: list[Fraction] = []
        self._gaps: list[tuple[Fraction, Fraction, Fraction]] | None = None

    def vacancy_key(self, pos: Point) -> tuple:
        return (pos[0],)

    def _next_exact(self) -> Fraction:
        n = len(self.exact_positions)
        if n < self.cfg.r:
            return self.q_at(n)
        if self._gaps is None:
            pts = [Fraction(0)] + sorted(self.exact_positions) + [Fraction(1)]
            self._gaps = [(-(b - a), a, b) for a, b in zip(pts, pts[1:])]
            heapq.heapify(self._gaps)
        _, a, b = heapq.heappop(self._gaps)
        mid = (a + b) / 2
        heapq.heappush(self._gaps, (-(mid - a), a, mid))
        heapq.heappush(self._gaps, (-(b - mid), mid, b))
        return mid

    def q_at(self, n: int) -> Fraction:
        return self.cfg.q[self.cfg.tau_index[n] - 1]

    def create_position(self) -> Point:
        f = self._next_exact()
        self.exact_positions.append(f)
        return (float(f),)

    def params(self) -> dict:
        return {"l": self.cfg.l, "r": self.cfg.r}

    def guarantee(self) -> float:
        return self.cfg.guarantee


# ------------------------------------------------------------ exact variant

def exact_tau(d: int) -> float:
    i, s = _split(d)
    return math.log1p((2 * s + 1) / 2 ** (i + 1)) / math.log(2)


def exact_dmin(d: int) -> float:
    """Minimum spacing once d logarithmic positions exist."""
    i, s = _split(d)
    return math.log1p(1.0 / (2 ** (i + 1) + 2 * s + 1)) / math.log(2)


def exact_apx(d: int) -> float:
    i, s = _split(d)
    return math.log(2) / ((2**i + s + 1) * math.log1p(1.0 / (2 ** (i + 1) + 2 * s + 1)))


class ExactLineAlgorithm(OnlineAlgorithm):
    name = "line-exact"

    def __init__(self, polytope: Polytope | None = None):
        super().__init__(polytope or segment())
        self.created = 0

    def vacancy_key(self, pos: Point) -> tuple:
        return (pos[0],)

    def create_position(self) -> Point:
        self.created += 1
        return (exact_tau(self.created),)

    def guarantee(self) -> float:
        return 2 * math.log(2)
