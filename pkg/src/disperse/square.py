"""Online placement in the unit square.

The square is cut by the lines 0, x, 2x, 3x, 3x+cx, 3x+2cx, 3x+3cx, 1 (with
x = 1/(3+4c)) into a 7x7 grid whose 36 interior vertices are handed out first
in a fixed order. After that, creation proceeds in rounds: round i starts with
every interior vertex of the 7*2^i grid occupied and ends with every interior
vertex of the 7*2^(i+1) grid occupied. Inside a round, cells are labelled by
region and filled in a fixed region order (five cases), which keeps the
minimum distance on a predictable staircase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import disp_square_exact_small, square_upper
from .geometry import Point, Polytope, square
from .online import OnlineAlgorithm

DEFAULT_C = 1.271
# c at which the two worst cases of the analysis coincide
OPTIMAL_C = (2 + math.sqrt(194 * math.sqrt(3))) / 16

YELLOW, RED, PINK, BLUE, GREEN, ORANGE = range(6)
REGION_NAMES = ("yellow", "red", "pink", "blue", "green", "orange")

# grid indices (a, b) of the 36 pre-fixed positions, in hand-out order
PREFIXED_ORDER = (
    (3, 3), (5, 5), (3, 5), (5, 3), (4, 4), (4, 2), (2, 4), (2, 2), (5, 4), (4, 5),
    (6, 6), (6, 5), (6, 4), (6, 3), (5, 6), (4, 6), (3, 6), (3, 4), (4, 3), (5, 2),
    (2, 5), (2, 3), (3, 2), (6, 2), (6, 1), (5, 1), (4, 1), (3, 1), (2, 1), (1, 1),
    (1, 2), (1, 3), (1, 4), (1, 5), (1, 6), (2, 6),
)

# (first n, last n, case label) of the groups among the first 36 positions
PREFIXED_GROUPS = ((1, 1), (2, 4), (5, 5), (6, 7), (8, 8), (9, 17), (18, 36))


class InternalConsistencyError(RuntimeError):
    """Raised when the creation bookkeeping disagrees with the closed-form counts."""


@dataclass(frozen=True)
class SquareConfig:
    c: float
    x: float

    def g(self, i: int) -> float:
        """Coordinate of line i of the 7x7 grid, i in 0..7."""
        return self.coarse(i, 1)

    def coarse(self, a: int, h: int) -> float:
        """Coordinate of line a of the 7h grid."""
        if a <= 3 * h:
            return a * self.x / h
        return 3 * self.x + (a - 3 * h) * self.c * self.x / h

    @property
    def q36(self) -> tuple[Point, ...]:
        return tuple((self.g(a), self.g(b)) for a, b in PREFIXED_ORDER)

    @property
    def nominal_ceiling(self) -> float:
        return (3 + 4 * self.c) / (4 * self.c)


def build_square_config(c: float = DEFAULT_C) -> SquareConfig:
    if not (1 < c < math.sqrt(2)):
        raise ValueError(f"c must lie strictly between 1 and sqrt(2), got {c}")
    return SquareConfig(float(c), 1.0 / (3 + 4 * c))


# ------------------------------------------------------------ closed forms

def round_start(i: int) -> int:
    """Positions already created when round i begins."""
    return (7 * 2**i - 1) ** 2


def case_bounds(i: int) -> tuple[int, int, int, int, int]:
    """Last position of cases 1..5 in round i."""
    h = 2**i
    return (
        65 * h * h - 22 * h + 2,
        89 * h * h - 36 * h + 4,
        98 * h * h - 42 * h + 5,
        130 * h * h - 36 * h + 2,
        round_start(i + 1),
    )


def case_counts(i: int) -> tuple[int, int, int, int, int]:
    h = 2**i
    n4a = 14 * h - 3
    n4b = 32 * h * h - 8 * h
    n1 = (4 * h - 1) ** 2
    n2 = 2 * (3 * h - 1) * (4 * h - 1)
    n3 = (3 * h - 1) ** 2
    n5 = round_start(i + 1) - round_start(i) - n1 - n2 - n3 - n4a - n4b
    return n1, n2, n3, n4a + n4b, n5


def case_of(n: int, cfg: SquareConfig | None = None) -> tuple[int, int]:
    """(round, case) for the n-th created position; round -1 covers the first 36."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n <= 36:
        for k, (lo, hi) in enumerate(PREFIXED_GROUPS, 1):
            if lo <= n <= hi:
                return -1, k
    i = 0
    while n > round_start(i + 1):
        i += 1
    for k, last in enumerate(case_bounds(i), 1):
        if n <= last:
            return i, k
    raise AssertionError("unreachable")


def _group_dmin(k: int, cfg: SquareConfig) -> float:
    c, x = cfg.c, cfg.x
    return (3 * x, 2 * c * x, math.sqrt(2) * c * x, math.sqrt(c * c + 1) * x,
            math.sqrt(2) * x, c * x, x)[k - 1]


def _round_dmin(i: int, k: int, cfg: SquareConfig) -> float:
    c, x = cfg.c, cfg.x
    scale = 2.0 ** (i + 1)
    return (math.sqrt(2) * c * x, x * math.sqrt(1 + c * c), math.sqrt(2) * x,
            c * x, x)[k - 1] / scale


def predicted_dmin_square(n: int, cfg: SquareConfig) -> float:
    """Minimum distance (boundary included) after n sequential arrivals."""
    i, k = case_of(n)
    if i < 0:
        return _group_dmin(k, cfg)
    return _round_dmin(i, k, cfg)


def case_first_positions(rounds: int = 5) -> list[int]:
    """First n of every group/case; the ratio is worst there within each stretch."""
    out = [lo for lo, _ in PREFIXED_GROUPS]
    for i in range(rounds):
        prev = round_start(i)
        for last in case_bounds(i):
            out.append(prev + 1)
            prev = last
    return out


def reference_ratio(n: int, cfg: SquareConfig) -> float:
    """Table value (n <= 36) or packing upper bound over the predicted d_min."""
    ref = disp_square_exact_small(n) if n <= 36 else square_upper(n)
    return ref / predicted_dmin_square(n, cfg)


def ratio_ceiling(cfg: SquareConfig, rounds: int = 30) -> float:
    """Largest reference ratio over all groups and cases.

    Within a stretch of constant d_min the reference only shrinks, so the
    first position of each stretch is enough; per-case ratios decrease with
    the round index, and 30 rounds is far past where they settle.
    """
    return max(reference_ratio(n, cfg) for n in case_first_positions(rounds))


# ---------------------------------------------------------- region labels

def region_formula(i: int) -> np.ndarray:
    """Region label of every cell of the 7*2^i grid at the start of round i."""
    h = 2**i
    N = 7 * h
    a = np.arange(N)[:, None]
    b = np.arange(N)[None, :]
    lab = np.full((N, N), -1, dtype=np.int8)
    left = (a >= 1) & (a <= 3 * h - 1)
    low = (b >= 1) & (b <= 3 * h - 1)
    right = (a >= 3 * h) & (a <= 7 * h - 2)
    up = (b >= 3 * h) & (b <= 7 * h - 2)
    lab[left & low] = RED
    lab[(right & low) | (left & up)] = PINK
    lab[(left & (b == N - 1)) | ((a == N - 1) & low)] = BLUE
    lab[right & up] = GREEN
    lab[((a >= 3 * h) & (b == N - 1)) | ((a == N - 1) & (b >= 3 * h))] = ORANGE
    lab[(a == 0) | (b == 0)] = YELLOW
    return lab


def refine_regions(lab: np.ndarray) -> np.ndarray:
    """Labels for the next round: split every cell in four, then let the strips
    along the boundary give up the copies that no longer touch it."""
    new = np.repeat(np.repeat(lab, 2, axis=0), 2, axis=1)
    M = new.shape[0]
    inner = np.zeros_like(new, dtype=bool)
    inner[1:M - 1, 1:M - 1] = True
    new[inner & (new == BLUE)] = PINK
    new[inner & (new == ORANGE)] = GREEN
    # former yellow copies one step inside take their inward neighbour's label
    for b in range(1, M):
        if new[1, b] == YELLOW:
            new[1, b] = new[2, b] if b > 1 else new[2, 2]
    for a in range(1, M):
        if new[a, 1] == YELLOW:
            new[a, 1] = new[a, 2] if a > 1 else new[2, 2]
    return new


class GridState:
    """Creation order of positions; independent of arrivals and departures."""

    def __init__(self, cfg: SquareConfig):
        self.cfg = cfg
        self.n = 0
        self.round = -1
        self.labels: np.ndarray | None = None
        self._queue: list[tuple[int, int]] = []
        self._queue_pos = 0
        self._case_marks: list[int] = []
        self.last_case: tuple[int, int] | None = None

    # fine-grid coordinate within round i (grid of 14*2^i intervals)
    def _fine(self, u: int) -> float:
        return self.cfg.coarse(u, 2 ** (self.round + 1))

    def _start_round(self, i: int) -> None:
        if i == 0:
            lab = region_formula(0)
        else:
            lab = refine_regions(self.labels)
            if not np.array_equal(lab, region_formula(i)):
                raise InternalConsistencyError(f"region labels drifted from their closed form at round {i}")
        self.labels = lab
        self.round = i
        queue, marks = self._round_queue(lab, i)
        self._queue = queue
        self._queue_pos = 0
        self._case_marks = marks

    def _round_queue(self, lab: np.ndarray, i: int):
        h = 2**i
        N = 7 * h
        F = 2 * N
        taken = np.zeros((F + 1, F + 1), dtype=bool)
        taken[0::2, 0::2] = True  # coarse vertices (boundary ones never used)

        def centres(regions):
            out = []
            for b in range(N):
                for a in range(N):
                    if lab[a, b] in regions:
                        out.append((2 * a + 1, 2 * b + 1))
            return out

        cases = [centres((GREEN,)), centres((PINK,)), centres((RED,)), centres((ORANGE, BLUE))]
        for lst in cases:
            for u, v in lst:
                taken[u, v] = True
        good = (GREEN, ORANGE)
        bad = (PINK, BLUE)
        mids = []
        for v in range(1, F):
            for u in range(1, F):
                if (u + v) % 2 == 0:
                    continue
                if u % 2:  # horizontal edge between cells below and above
                    pair = (lab[(u - 1) // 2, v // 2 - 1], lab[(u - 1) // 2, v // 2])
                else:
                    pair = (lab[u // 2 - 1, (v - 1) // 2], lab[u // 2, (v - 1) // 2])
                if any(p in good for p in pair) and not any(p in bad for p in pair):
                    mids.append((u, v))
        for u, v in mids:
            taken[u, v] = True
        cases[3] = cases[3] + mids
        rest = [(u, v) for v in range(1, F) for u in range(1, F) if not taken[u, v]]
        cases.append(rest)
        expect = case_counts(i)
        got = tuple(len(c) for c in cases)
        if got != expect:
            raise InternalConsistencyError(
                f"round {i}: per-case position counts {got} differ from the closed form {expect}"
            )
        queue = [p for lst in cases for p in lst]
        marks = list(np.cumsum(got))
        return queue, marks

    def next_position(self) -> Point:
        self.n += 1
        if self.n <= 36:
            a, b = PREFIXED_ORDER[self.n - 1]
            self.last_case = case_of(self.n)
            return (self.cfg.g(a), self.cfg.g(b))
        if self.round < 0:
            self._start_round(0)
        elif self._queue_pos >= len(self._queue):
            self._start_round(self.round + 1)
        u, v = self._queue[self._queue_pos]
        k = next(j for j, m in enumerate(self._case_marks, 1) if self._queue_pos < m)
        self._queue_pos += 1
        self.last_case = (self.round, k)
        expected = case_of(self.n)
        if self.last_case != expected:
            raise InternalConsistencyError(
                f"position {self.n} came from round/case {self.last_case}, closed form says {expected}"
            )
        return (self._fine(u), self._fine(v))


class SquareAlgorithm(OnlineAlgorithm):
    name = "square"
    ceiling_vs_upper = True

    def __init__(self, c: float = DEFAULT_C, polytope: Polytope | None = None):
        super().__init__(polytope or square())
        self.cfg = build_square_config(c)
        self.state = GridState(self.cfg)

    def vacancy_key(self, pos: Point) -> tuple:
        return (pos[1], pos[0])

    def create_position(self) -> Point:
        return self.state.next_position()

    def params(self) -> dict:
        return {"c": self.cfg.c}

    def guarantee(self) -> float:
        return ratio_ceiling(self.cfg)
