import pytest
from hypothesis import given, strategies as st

from disperse.adversary import gen_random
from disperse.cd import (SelectionPair, cd_reference, cd_upper_bound, partition_groups, run_acd, select_pair,
                         synthetic_sequence)
from disperse.events import EventSequence, cd_value, max_simultaneous
from disperse.geometry import segment, square
from disperse.greedy import SegmentGreedy
from disperse.line import LineAlgorithm, build_harmonic_config
from disperse.square import SquareAlgorithm

pairs_st = st.lists(
    st.tuples(st.integers(0, 25), st.integers(1, 10)).map(lambda p: (float(p[0]), float(p[0] + p[1]))),
    min_size=1, max_size=40,
)


def seq(*pairs):
    return EventSequence.from_pairs(pairs)


def disjoint_within(S, group):
    life = sorted((S.by_id()[i].s, S.by_id()[i].d) for i in group)
    return all(a[1] < b[0] for a, b in zip(life, life[1:]))


def uncovered_times(S, chosen):
    """Probe every endpoint and every midpoint between consecutive endpoints."""
    ts = sorted({t for p in S.points for t in (p.s, p.d)})
    probes = ts + [(a + b) / 2 for a, b in zip(ts, ts[1:])]
    out = []
    for t in probes:
        present = [p for p in S.points if p.s <= t <= p.d]
        if present and not any(p.id in chosen for p in present):
            out.append(t)
    return out


def test_select_pair_examples():
    assert select_pair(seq((0, 2), (1, 3), (2, 5))) == SelectionPair((1,), (3,))
    assert select_pair(seq((0, 1))) == SelectionPair((1,), ())
    assert select_pair(seq((0, 10), (1, 2), (3, 4))) == SelectionPair((1,), ())


def test_select_pair_rejects_empty():
    with pytest.raises(ValueError):
        select_pair(EventSequence(()))


def test_select_pair_skips_gaps():
    # nothing is present in (1, 5); the window jumps to the next arrival
    p = select_pair(seq((0, 1), (5, 6)))
    assert set(p.I1) | set(p.I2) == {1, 2}


@given(pairs_st)
def test_selection_properties(pairs):
    S = EventSequence.from_pairs(pairs)
    p = select_pair(S)
    assert not set(p.I1) & set(p.I2)
    assert disjoint_within(S, p.I1) and disjoint_within(S, p.I2)
    assert uncovered_times(S, set(p.I1) | set(p.I2)) == []


@given(pairs_st)
def test_partition_covers_everything_within_m_passes(pairs):
    S = EventSequence.from_pairs(pairs)
    groups = partition_groups(S)
    assert len(groups) % 2 == 0 and len(groups) // 2 <= max_simultaneous(S)
    flat = [i for g in groups for i in g]
    assert sorted(flat) == sorted(p.id for p in S.points)
    assert all(disjoint_within(S, g) for g in groups)


def test_disjoint_lifetimes_take_one_pass():
    S = seq((0, 1), (2, 3), (4, 5), (6, 7))
    assert len(partition_groups(S)) == 2


def test_identical_lifetimes_take_one_pass_each():
    # each pass can take only one of n identical intervals: the second window starts at their common end
    for n in (1, 2, 3, 6):
        groups = partition_groups(EventSequence.from_pairs([(0, 1)] * n))
        assert len(groups) // 2 == n
        assert all(len(groups[2 * j]) == 1 and groups[2 * j + 1] == () for j in range(n))


def test_synthetic_sequence_shape():
    S = synthetic_sequence(3)
    assert S.pairs() == [(0, 3), (0, 3), (1, 3), (1, 3), (2, 3), (2, 3)]


def test_run_acd_places_groups_together():
    S = gen_random(30, 4)
    ga, tr = run_acd(S, LineAlgorithm(3), segment())
    where = tr.positions()
    for j, g in enumerate(ga.groups):
        for pid in g:
            assert where[pid] == ga.positions[j]
    assert len(ga.positions) == 2 * ga.passes
    assert tr.meta["algorithm"] == "acd[line]"


def test_run_acd_uses_black_box_positions():
    S = seq((0, 1), (2, 3))
    ga, _ = run_acd(S, LineAlgorithm(1), segment())
    # the black box sees two simultaneous arrivals: 3/5, then the midpoint of (0, 3/5)
    assert ga.positions == ((0.6,), (0.3,))


def test_cd_upper_bound_examples():
    assert cd_upper_bound(seq((0, 2), (1, 3)), segment()) == pytest.approx(4 / 3)
    assert cd_upper_bound(seq((0, 5)), segment()) == 2.5
    total, kind, rows = cd_reference(seq((0, 1), (2, 3)), segment())
    assert total == 1.0 and kind == "exact"
    assert (1, 2, 0, 0.0) in rows
    assert cd_reference(seq(*[(0, 1)] * 40), square())[1] == "upper"


@pytest.mark.parametrize("seed", range(8))
def test_acd_bound_with_line(seed):
    S = gen_random(60, 500 + seed)
    sigma2 = float(2 * build_harmonic_config(3).sigma)
    _, tr = run_acd(S, LineAlgorithm(3), segment())
    assert cd_value(tr, segment()) >= cd_upper_bound(S, segment()) / (2 * sigma2) - 1e-9


def test_acd_with_other_black_boxes():
    S = gen_random(25, 11)
    for algo, P in ((SegmentGreedy(), segment()), (SquareAlgorithm(), square())):
        ga, tr = run_acd(S, algo, P)
        assert cd_value(tr, P) > 0
        assert ga.passes <= max_simultaneous(S)
