import math

import pytest
from hypothesis import given, strategies as st

from disperse.bounds import disp_reference
from disperse.cd import cd_upper_bound
from disperse.events import (EventError, EventSequence, PlacementTrace, TraceRecord, atwc_value, cd_value,
                             max_simultaneous, read_instance, slice_timeline, write_instance)
from disperse.geometry import segment, square
from disperse.line import LineAlgorithm, build_harmonic_config, predicted_dmin
from disperse.online import replay, simulate

pairs_st = st.lists(
    st.tuples(st.integers(0, 20), st.integers(1, 10)).map(lambda p: (float(p[0]), float(p[0] + p[1]))),
    min_size=1, max_size=25,
)


def seq(*pairs):
    return EventSequence.from_pairs(pairs)


def fixed(S, where, P=None):
    return replay(S, {i: (v,) for i, v in where.items()}, P or segment())


def brute_presence(S, t):
    return {p.id for p in S.points if p.s <= t <= p.d}


def test_validation():
    with pytest.raises(EventError):
        seq((1, 1))
    with pytest.raises(EventError):
        seq((-1, 2))
    with pytest.raises(EventError):
        EventSequence.from_pairs([(0, 1), (0, 2)], ids=[3, 3])


def test_max_simultaneous_examples():
    assert max_simultaneous(seq((0, 1), (2, 3))) == 1
    assert max_simultaneous(seq((0, 2), (1, 3))) == 2
    assert max_simultaneous(seq((0, 2), (1, 3), (2, 5))) == 3
    assert max_simultaneous(EventSequence(())) == 0


def test_slice_examples():
    sl = slice_timeline(seq((0, 2), (1, 3)))
    assert sl.intervals == ((0, 1), (1, 2), (2, 3)) and sl.counts == (1, 2, 1)
    sl = slice_timeline(seq((0, 1)))
    assert sl.intervals == ((0, 1),) and sl.counts == (1,)
    sl = slice_timeline(seq((0, 2), (0, 2)))
    assert sl.intervals == ((0, 2),) and sl.counts == (2,)


@given(pairs_st)
def test_max_simultaneous_matches_brute_force(pairs):
    S = EventSequence.from_pairs(pairs)
    times = sorted({t for p in pairs for t in p})
    assert max_simultaneous(S) == max(len(brute_presence(S, t)) for t in times)


@given(pairs_st)
def test_slices_bounded_by_closed_count(pairs):
    # with shared endpoints the closed count at an instant can exceed every open slice
    S = EventSequence.from_pairs(pairs)
    sl = slice_timeline(S)
    assert max(sl.counts) <= max_simultaneous(S)
    ends = [t for p in pairs for t in p]
    if len(set(ends)) == len(ends):
        assert max(sl.counts) == max_simultaneous(S)


@given(pairs_st, st.randoms(use_true_random=False))
def test_slicing_ignores_input_order(pairs, rnd):
    S = EventSequence.from_pairs(pairs)
    shuffled = list(zip(range(1, len(pairs) + 1), pairs))
    rnd.shuffle(shuffled)
    T = EventSequence.from_pairs([p for _, p in shuffled], ids=[i for i, _ in shuffled])
    assert slice_timeline(S) == slice_timeline(T)
    assert slice_timeline(S) == slice_timeline(EventSequence(S.points))


@given(pairs_st)
def test_slice_presence_matches_midpoints(pairs):
    S = EventSequence.from_pairs(pairs)
    sl = slice_timeline(S)
    for (a, b), ids in zip(sl.intervals, sl.present):
        assert set(ids) == brute_presence(S, (a + b) / 2)


def test_atwc_examples():
    assert atwc_value(fixed(seq((0, 1)), {1: 0.5}), segment()) == 0.5
    tr = fixed(seq((0, 2), (1, 3)), {1: 1 / 3, 2: 2 / 3})
    assert atwc_value(tr, segment()) == pytest.approx(1 / 3)


def test_atwc_small_line_run():
    # l = 1: first point at 3/5, the second splits the largest gap (0, 3/5)
    cfg = build_harmonic_config(1)
    tr = simulate(seq((1, 3), (2, 3)), LineAlgorithm(1))
    assert [r.pos for r in tr.records[:2]] == [(0.6,), (0.3,)]
    assert atwc_value(tr, segment()) == pytest.approx(predicted_dmin(2, cfg), rel=1e-12)


def test_cd_examples():
    assert cd_value(fixed(seq((0, 4)), {1: 0.5}), segment()) == 2.0
    assert cd_value(fixed(seq((0, 3), (0, 3)), {1: 1 / 3, 2: 2 / 3}), segment()) == pytest.approx(1.0)
    assert cd_value(fixed(seq((0, 1), (1, 2)), {1: 0.5, 2: 0.5}), segment()) == pytest.approx(1.0)


def test_shared_instant_counts_in_atwc():
    # A and B overlap only at t = 1; under closed lifetimes they coexist there
    tr = fixed(seq((0, 1), (1, 2)), {1: 0.5, 2: 0.5})
    assert atwc_value(tr, segment()) == 0.0
    assert cd_value(tr, segment()) == pytest.approx(1.0)


def test_without_boundary_lonely_slices_are_undefined():
    tr = replay(seq((0, 1), (0.5, 2)), {1: (0.0,), 2: (1.0,)}, segment(), with_boundary=False)
    assert atwc_value(tr, segment(), with_boundary=False) == 1.0
    assert cd_value(tr, segment(), with_boundary=False) == pytest.approx(0.5)


@given(pairs_st, st.integers(1, 5))
def test_line_objectives_below_reference(pairs, l):
    S = EventSequence.from_pairs(pairs)
    tr = simulate(S, LineAlgorithm(l))
    m = max_simultaneous(S)
    assert atwc_value(tr, segment()) <= disp_reference(m, segment())[0] + 1e-12
    assert cd_value(tr, segment()) <= cd_upper_bound(S, segment()) + 1e-9


def test_instance_round_trip(tmp_path):
    S = seq((0.25, 1.5), (0, 3), (2, 2.5))
    p = tmp_path / "inst.txt"
    write_instance(S, p, header="three points")
    assert read_instance(p).pairs() == S.pairs()
    p.write_text("# c\n0 1\nbad line\n")
    with pytest.raises(EventError):
        read_instance(p)


def test_trace_round_trip(tmp_path):
    tr = simulate(seq((0, 2), (1, 3)), LineAlgorithm(2))
    p = tmp_path / "t.jsonl"
    tr.write_jsonl(p)
    back = PlacementTrace.read_jsonl(p)
    assert back.records == tr.records and back.meta["algorithm"] == "line"


def test_trace_validation():
    bad = PlacementTrace([TraceRecord(0, "arrive", 1, (2.0, 0.5), math.inf),
                          TraceRecord(1, "depart", 1, None, math.inf)])
    with pytest.raises(EventError):
        atwc_value(bad, square())
    dangling = PlacementTrace([TraceRecord(0, "arrive", 1, (0.5,), 0.5)])
    with pytest.raises(EventError):
        dangling.lifetimes()


@given(pairs_st, st.integers(1, 4))
def test_driver_record_minimum_is_atwc(pairs, l):
    # arrivals at t are recorded before departures at t, so the records see every closed instant
    tr = simulate(EventSequence.from_pairs(pairs), LineAlgorithm(l))
    assert min(r.dmin for r in tr.records) == pytest.approx(atwc_value(tr, segment()), rel=1e-12)
