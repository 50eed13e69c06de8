import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from disperse.adversary import gen_random, gen_sequential
from disperse.bounds import disp_kd_lower
from disperse.events import EventSequence, atwc_value
from disperse.geometry import GeometryError, Polytope, segment, square, unit_cube
from disperse.greedy import GreedyAlgorithm, GreedyConfig, GreedySearch, SegmentGreedy, grid_slices
from disperse.online import simulate


def naive_next(existing, P, cfg):
    """Loop over every cube centre of the grid, keep the first best score."""
    k = P.dim
    m = grid_slices(len(existing), k, cfg)
    best, arg = -1.0, None
    for idx in itertools.product(range(m), repeat=k):
        c = tuple(P.lo[j] + (idx[j] + 0.5) / m * (P.hi - P.lo).max() for j in range(k))
        if not P.contains(c):
            continue
        v = max(P.boundary_distance(c), 0.0)
        for q in existing:
            v = min(v, math.dist(c, q))
        if v > best:
            best, arg = v, c
    return arg


def test_first_point_is_central():
    cfg = GreedyConfig(epsilon=0.5)
    p = GreedySearch(square(), cfg).next_point([])
    assert square().boundary_distance(p) >= (1 - 0.5) * 0.5


def test_second_point_keeps_half_the_pair_optimum():
    eps = 0.5
    s = GreedySearch(square(), GreedyConfig(epsilon=eps))
    p1 = s.next_point([])
    p2 = s.next_point([p1])
    v = min(math.dist(p1, p2), square().boundary_distance(p1), square().boundary_distance(p2))
    assert v >= (1 - eps) * 0.36940 / 2


def test_three_arrivals_on_cube():
    P = unit_cube(3)
    algo = GreedyAlgorithm(P, epsilon=0.5)
    tr = simulate(gen_sequential(3), algo)
    v = atwc_value(tr, P)
    assert v >= (1 - 0.5) * disp_kd_lower(2, 3, 1.0) / 2
    assert v >= algo.search.certificate(3) - 1e-12


def test_segment_is_rejected():
    with pytest.raises(GeometryError):
        GreedySearch(segment(), GreedyConfig())


def test_config_validation():
    with pytest.raises(ValueError):
        GreedyConfig(epsilon=0)
    with pytest.raises(ValueError):
        GreedyConfig(gamma=1.5)


def test_overstated_covering_rate():
    sliver = Polytope(A=[[-1, 0], [1, 0], [0, -1], [0, 1]], b=[0, 1, 0, 0.01], lo=[0, 0], hi=[1, 0.01],
                      covering_rate=1.0, name="sliver")
    with pytest.raises(GeometryError):
        GreedySearch(sliver, GreedyConfig(epsilon=0.9)).next_point([])


def test_reuse():
    algo = GreedyAlgorithm(square(), epsilon=0.5)
    a = algo.on_arrive(1)
    algo.on_depart(1)
    assert algo.on_arrive(2) == a
    assert len(algo.registry) == 1


@pytest.mark.parametrize("k,n", [(2, 0), (2, 1), (2, 4), (3, 2)])
def test_scoring_matches_naive_loop(k, n):
    P = unit_cube(k)
    cfg = GreedyConfig(epsilon=0.7)
    rng = np.random.default_rng(k * 10 + n)
    existing = [tuple(r) for r in rng.uniform(0.1, 0.9, size=(n, k))]
    got = GreedySearch(P, cfg).next_point(existing)
    assert got == pytest.approx(naive_next(existing, P, cfg), abs=1e-14)


def test_scoring_matches_naive_loop_triangle():
    tri = Polytope(A=[[-1, 0], [0, -1], [1, 1]], b=[0, 0, 1], lo=[0, 0], hi=[1, 1], covering_rate=0.5,
                   name="tri")
    cfg = GreedyConfig(epsilon=0.6, gamma=0.5)
    s = GreedySearch(tri, cfg)
    pts = []
    for _ in range(4):
        want = naive_next(pts, tri, cfg)
        pts.append(s.next_point(pts))
        assert pts[-1] == pytest.approx(want, abs=1e-14)


def test_certificate_holds_on_random_instance():
    algo = GreedyAlgorithm(square(), epsilon=0.3)
    tr = simulate(gen_random(30, 3), algo)
    assert atwc_value(tr, square()) >= algo.search.certificate(len(algo.registry)) - 1e-12


@settings(max_examples=20)
@given(st.lists(st.tuples(st.integers(0, 10), st.integers(1, 5)), min_size=1, max_size=12),
       st.integers(1, 7), st.integers(0, 50))
def test_placement_invariant_under_order_preserving_relabel(pairs, scale, shift):
    # ties at equal timestamps are broken by id, so only relabelings that keep id order are neutral
    S = EventSequence.from_pairs([(float(s), float(s + d)) for s, d in pairs])
    T = EventSequence.from_pairs([(p.s, p.d) for p in S.points], ids=[scale * p.id + shift for p in S.points])
    a = simulate(S, GreedyAlgorithm(square(), epsilon=0.6)).positions()
    b = simulate(T, GreedyAlgorithm(square(), epsilon=0.6)).positions()
    assert all(a[p.id] == b[scale * p.id + shift] for p in S.points)


def test_segment_greedy_midpoints():
    algo = SegmentGreedy()
    simulate(gen_sequential(5), algo)
    assert [float(f) for f in algo.exact_positions] == [0.5, 0.25, 0.75, 0.125, 0.375]


def test_segment_greedy_without_boundary_starts_at_ends():
    algo = SegmentGreedy(with_boundary=False)
    simulate(gen_sequential(3), algo)
    assert [float(f) for f in algo.exact_positions] == [0.0, 1.0, 0.5]
