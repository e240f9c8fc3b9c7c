"""Hybrid clock behaviour against a tiny functional reference model.

The reference below expresses both operations as lexicographic maxima over
(physical_ms, logical) pairs, which is a different formulation from the
branching code under test:

    tick(state, now)      = max((now, 0), (pt, l + 1))
    observe(state, remote) = max(state, remote_pair)

Any divergence between the two is a bug in one of them.
"""

import itertools

from hypothesis import given, settings
from hypothesis import strategies as st

from medsync.hlc import HybridLogicalClock, HlcTimestamp

MS = st.integers(min_value=0, max_value=2**43)
LOGICAL = st.integers(min_value=0, max_value=50)


def oracle_tick(state, now):
    pt, logical = state
    return max((now, 0), (pt, logical + 1))


def oracle_observe(state, remote_pair):
    return max(state, remote_pair)


def test_commit_after_observed_stamp_at_same_wall_time():
    # observing (t, 5, R) and committing at local wall time t yields (t, 6, S)
    t = 1_700_000_000_000
    clock = HybridLogicalClock("S", now_ms=lambda: t)
    clock.observe(HlcTimestamp(t, 5, "R"))
    stamp = clock.tick()
    assert stamp == HlcTimestamp(t, 6, "S")


def test_tick_uses_wall_clock_when_it_leads():
    now = {"ms": 100}
    clock = HybridLogicalClock("a", now_ms=lambda: now["ms"])
    assert clock.tick() == HlcTimestamp(100, 0, "a")
    now["ms"] = 250
    assert clock.tick() == HlcTimestamp(250, 0, "a")


def test_tick_increments_logical_when_wall_clock_stalls():
    clock = HybridLogicalClock("a", now_ms=lambda: 100)
    stamps = [clock.tick() for _ in range(4)]
    assert [s.logical for s in stamps] == [0, 1, 2, 3]
    assert all(s.physical_ms == 100 for s in stamps)


def test_tick_survives_wall_clock_regression():
    now = {"ms": 500}
    clock = HybridLogicalClock("a", now_ms=lambda: now["ms"])
    first = clock.tick()
    now["ms"] = 10  # wall clock jumped backwards
    second = clock.tick()
    assert second > first
    assert second.physical_ms == 500


def test_observe_is_merge_without_increment():
    clock = HybridLogicalClock("a", now_ms=lambda: 0)
    clock.observe(HlcTimestamp(900, 7, "b"))
    assert clock.peek() == HlcTimestamp(900, 7, "a")
    # older stamp leaves the clock untouched
    clock.observe(HlcTimestamp(800, 90, "b"))
    assert clock.peek() == HlcTimestamp(900, 7, "a")
    # same physical, higher logical: logical wins
    clock.observe(HlcTimestamp(900, 12, "c"))
    assert clock.peek() == HlcTimestamp(900, 12, "a")


def test_peek_does_not_advance():
    clock = HybridLogicalClock("a", now_ms=lambda: 5)
    before = clock.peek()
    assert clock.peek() == before
    assert clock.tick() > before


def test_encode_decode_round_trip():
    stamp = HlcTimestamp(123456789, 42, "accra-1")
    assert HlcTimestamp.decode(stamp.encode()) == stamp
    assert stamp.encode() == "123456789:42:accra-1"


def test_ordering_breaks_ties_by_server_id():
    a = HlcTimestamp(5, 1, "a")
    b = HlcTimestamp(5, 1, "b")
    assert a < b
    assert sorted([b, a]) == [a, b]


@given(
    st.lists(
        st.one_of(
            st.tuples(st.just("tick"), MS),
            st.tuples(st.just("observe"), st.tuples(MS, LOGICAL)),
        ),
        max_size=60,
    )
)
def test_matches_functional_reference(ops):
    state = (0, 0)
    wall = 0
    clock = HybridLogicalClock("s", now_ms=lambda: wall)
    for op, arg in ops:
        if op == "tick":
            wall = max(wall, arg)  # engine clocks only move forward here
            state = oracle_tick(state, wall)
            got = clock.tick()
        else:
            remote = HlcTimestamp(arg[0], arg[1], "peer")
            state = oracle_observe(state, (arg[0], arg[1]))
            clock.observe(remote)
            got = clock.peek()
        assert (got.physical_ms, got.logical) == state
        assert got.server_id == "s"


@given(st.lists(st.tuples(MS, LOGICAL), min_size=1, max_size=40))
def test_issued_stamps_strictly_increase(remote_pairs):
    clock = HybridLogicalClock("s", now_ms=lambda: 1000)
    issued = []
    for ms, logical in remote_pairs:
        clock.observe(HlcTimestamp(ms, logical, "r"))
        issued.append(clock.tick())
    assert issued == sorted(issued)
    assert len(set(issued)) == len(issued)


@given(st.lists(st.tuples(MS, LOGICAL), min_size=1, max_size=40))
def test_issued_stamp_dominates_everything_observed(remote_pairs):
    clock = HybridLogicalClock("s", now_ms=lambda: 0)
    for ms, logical in remote_pairs:
        clock.observe(HlcTimestamp(ms, logical, "r"))
    stamp = clock.tick()
    for ms, logical in remote_pairs:
        assert (stamp.physical_ms, stamp.logical) > (ms, logical)


@settings(max_examples=30)
@given(st.integers(min_value=1, max_value=4), st.integers(min_value=1, max_value=6))
def test_stamps_form_total_order_across_servers(n_servers, n_each):
    # same frozen wall clock everywhere; server ids alone must break ties
    clocks = [HybridLogicalClock(f"s{i}", now_ms=lambda: 77) for i in range(n_servers)]
    stamps = [c.tick() for c in clocks for _ in range(n_each)]
    assert len(set(stamps)) == len(stamps)
    for a, b in itertools.combinations(stamps, 2):
        assert (a < b) != (b < a)
