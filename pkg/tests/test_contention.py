import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_force_waits, occupancy_profile
from skyway.contention import (
    FCFSOrderError,
    StationSchedule,
    insert_fcfs,
    max_occupancy,
    predicted_wait,
    rebuild_schedule,
    station_snapshot,
)
from skyway.model import Station


def sched_from(pads, arrivals):
    return rebuild_schedule(Station(0, (0, 0), pads), arrivals)


def test_single_pad_queue():
    s = StationSchedule(0, 1)
    insert_fcfs(s, 1, 0, 60)
    res, wait = insert_fcfs(s, 2, 30, 60)
    assert (res.start, wait) == (60, 30)


def test_no_contention():
    res, wait = insert_fcfs(StationSchedule(0, 1), 1, 10, 60)
    assert (res.start, wait) == (10, 0)


def test_two_pads_third_arrival():
    # frozen from brute_force_waits([(1,0,60),(2,10,60),(3,20,60)], 2) -> {3: 40}
    s = StationSchedule(0, 2)
    insert_fcfs(s, 1, 0, 60)
    insert_fcfs(s, 2, 10, 60)
    res, wait = insert_fcfs(s, 3, 20, 60)
    assert (res.start, wait) == (60, 40)
    assert brute_force_waits([(1, 0, 60), (2, 10, 60), (3, 20, 60)], 2)[3] == 40


def test_out_of_order_append_rejected():
    s = StationSchedule(0, 1)
    insert_fcfs(s, 1, 50, 10)
    with pytest.raises(FCFSOrderError):
        insert_fcfs(s, 2, 40, 10)
    with pytest.raises(FCFSOrderError):
        insert_fcfs(s, 0, 50, 10)


def test_rebuild_examples():
    assert len(sched_from(1, [])) == 0
    s = sched_from(1, [(3, 10, 60), (1, 0, 60), (2, 5, 60)])
    assert s.waits() == {1: 0, 2: 55, 3: 110}


def test_rebuild_permutation_invariant():
    arrivals = [(1, 0, 60), (2, 0, 30), (3, 45, 60), (4, 45, 10)]
    canonical = sched_from(2, arrivals)
    for perm in itertools.permutations(arrivals):
        assert sched_from(2, list(perm)) == canonical


def test_predicted_wait_examples():
    assert predicted_wait(StationSchedule(0, 1), 30, 60) == 0
    s = sched_from(1, [(1, 0, 60), (2, 20, 60)])
    assert [(r.start, r.end) for r in s.reservations] == [(0, 60), (60, 120)]
    assert predicted_wait(s, 30, 60) == 90
    assert len(s) == 2


def test_predicted_wait_equals_insert():
    s = sched_from(2, [(1, 0, 60), (2, 10, 60)])
    expected = predicted_wait(s, 20, 60, drone=3)
    _, wait = insert_fcfs(s.copy(), 3, 20, 60)
    assert expected == wait == 40


def test_predicted_wait_for_earlier_arrival_queues_ahead():
    s = sched_from(1, [(1, 0, 60), (2, 50, 60)])
    # drone 3 arriving at 20 goes ahead of drone 2
    assert predicted_wait(s, 20, 60, drone=3) == 40


def test_snapshot_examples():
    s = sched_from(1, [(1, 100, 60)])
    snap = station_snapshot(s, 50)
    assert not snap.recharging and not snap.queued and [r.drone for r in snap.inbound] == [1]

    s = sched_from(1, [(1, 0, 60)])
    snap = station_snapshot(s, 30)
    assert [r.drone for r in snap.recharging] == [1] and snap.remaining == [30]

    s = sched_from(1, [(1, 0, 60), (2, 20, 60)])
    snap = station_snapshot(s, 30)
    assert [r.drone for r in snap.recharging] == [1]
    assert [r.drone for r in snap.queued] == [2]
    assert snap.inbound == []


def test_snapshot_drops_finished():
    s = sched_from(1, [(1, 0, 60)])
    assert station_snapshot(s, 60) == ([], [], [], [])


arrival_sets = st.lists(
    st.tuples(st.integers(0, 300), st.integers(0, 120)), min_size=0, max_size=6
).map(lambda xs: [(i, a, d) for i, (a, d) in enumerate(xs)])


@settings(max_examples=300, deadline=None)
@given(arrival_sets, st.integers(1, 3))
def test_schedule_matches_minute_oracle(arrivals, pads):
    s = sched_from(pads, arrivals)
    assert s.waits() == brute_force_waits(arrivals, pads)


@settings(max_examples=300, deadline=None)
@given(arrival_sets, st.integers(1, 3))
def test_capacity_fcfs_and_nonnegative_wait(arrivals, pads):
    s = sched_from(pads, arrivals)
    horizon = max((r.end for r in s.reservations), default=0)
    assert max(occupancy_profile([(r.start, r.end) for r in s.reservations], horizon)) <= pads
    assert max_occupancy(s) <= pads
    keyed = sorted(s.reservations, key=lambda r: (r.arrival, r.drone))
    assert [r.start for r in keyed] == sorted(r.start for r in keyed)
    assert all(r.arrival <= r.start <= r.end for r in s.reservations)


@settings(max_examples=200, deadline=None)
@given(arrival_sets, st.integers(1, 3), st.integers(0, 400), st.integers(0, 100))
def test_predicted_wait_is_what_rebuild_gives(arrivals, pads, at, dur):
    s = sched_from(pads, arrivals)
    rebuilt = sched_from(pads, arrivals + [(99, at, dur)])
    assert predicted_wait(s, at, dur, drone=99) == rebuilt.waits()[99]


def test_jump_oracle_agrees_with_minute_oracle():
    rng = random.Random(5)
    for _ in range(200):
        arrivals = [(i, rng.randrange(200), rng.randrange(1, 90)) for i in range(rng.randint(1, 6))]
        pads = rng.randint(1, 3)
        assert brute_force_waits(arrivals, pads, jump=True) == brute_force_waits(arrivals, pads)
