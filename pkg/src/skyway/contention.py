"""First-come-first-served pad reservations at recharging stations."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Tuple

_LAST = float("inf")


class FCFSOrderError(ValueError):
    """Raised when an append would violate arrival order; rebuild instead."""


@dataclass(frozen=True)
class Reservation:
    drone: int
    arrival: int
    start: int
    end: int
    pad: int

    @property
    def wait(self) -> int:
        return self.start - self.arrival


class StationSchedule:
    """Reservations at one station, kept in (arrival, drone) order.

    Waiting drones do not hold a pad; only recharging ones do.
    """

    def __init__(self, station: int, pad_count: int):
        if pad_count < 1:
            raise ValueError(f"station {station}: pad_count must be >= 1")
        self.station = station
        self.pad_count = pad_count
        self.reservations: List[Reservation] = []
        self._pad_free = [0] * pad_count

    def copy(self) -> "StationSchedule":
        other = StationSchedule(self.station, self.pad_count)
        other.reservations = list(self.reservations)
        other._pad_free = list(self._pad_free)
        return other

    @property
    def last_key(self) -> Optional[Tuple[int, int]]:
        if not self.reservations:
            return None
        r = self.reservations[-1]
        return (r.arrival, r.drone)

    def waits(self) -> dict:
        return {r.drone: r.wait for r in self.reservations}

    def __len__(self):
        return len(self.reservations)

    def __eq__(self, other):
        if not isinstance(other, StationSchedule):
            return NotImplemented
        return (self.station, self.pad_count, self.reservations) == (
            other.station, other.pad_count, other.reservations)

    def __repr__(self):
        return f"StationSchedule(station={self.station}, pads={self.pad_count}, n={len(self)})"


def insert_fcfs(sched: StationSchedule, drone: int, arrival: int, duration: int) -> Tuple[Reservation, int]:
    """Append a reservation; the drone takes the pad that frees up first."""
    if duration < 0 or arrival < 0:
        raise ValueError("arrival and duration must be >= 0")
    last = sched.last_key
    if last is not None and (arrival, drone) <= last:
        raise FCFSOrderError(
            f"station {sched.station}: arrival ({arrival}, drone {drone}) precedes {last}")
    free = sched._pad_free
    pad = min(range(sched.pad_count), key=lambda i: (free[i], i))
    start = max(arrival, free[pad])
    res = Reservation(drone, arrival, start, start + duration, pad)
    free[pad] = res.end
    sched.reservations.append(res)
    return res, start - arrival


def rebuild_schedule(station, arrivals: Iterable[Tuple[int, int, int]], pad_count: Optional[int] = None) -> StationSchedule:
    """Canonical FCFS schedule for a multiset of (drone, arrival, duration).

    ``station`` may be a :class:`~skyway.model.Station` or a bare id, in which
    case ``pad_count`` is required.
    """
    if pad_count is None:
        station_id, pad_count = station.id, station.pad_count
    else:
        station_id = getattr(station, "id", station)
    sched = StationSchedule(station_id, pad_count)
    for drone, arrival, duration in sorted(arrivals, key=lambda a: (a[1], a[0])):
        insert_fcfs(sched, drone, arrival, duration)
    return sched


def predicted_wait(sched: StationSchedule, arrival: int, duration: int = 0,
                   drone: Optional[int] = None) -> int:
    """Wait a drone arriving at ``arrival`` would get, without mutating.

    Reservations that come later in FCFS order cannot delay the query, so only
    the prefix ahead of it is folded. ``drone=None`` queues behind every
    reservation with the same arrival time.
    """
    key = (arrival, _LAST if drone is None else drone)
    res = sched.reservations
    if not res or key > (res[-1].arrival, res[-1].drone):
        free = sched._pad_free
    else:
        cut = bisect.bisect_left([(r.arrival, r.drone) for r in res], key)
        free = [0] * sched.pad_count
        for r in res[:cut]:
            free[r.pad] = r.end
    return max(arrival, min(free)) - arrival


class Snapshot(NamedTuple):
    recharging: List[Reservation]
    remaining: List[int]
    queued: List[Reservation]
    inbound: List[Reservation]


def station_snapshot(sched: StationSchedule, now: int) -> Snapshot:
    """What a deciding drone can see at a station at time ``now``.

    Drones recharging (with their remaining time), drones waiting for a pad,
    and drones yet to arrive. Finished reservations are dropped.
    """
    recharging, remaining, queued, inbound = [], [], [], []
    for r in sched.reservations:
        if r.arrival > now:
            inbound.append(r)
        elif now < r.start:
            queued.append(r)
        elif now < r.end:
            recharging.append(r)
            remaining.append(r.end - now)
    return Snapshot(recharging, remaining, queued, inbound)


def max_occupancy(sched: StationSchedule) -> int:
    """Peak number of simultaneously recharging drones."""
    events = []
    for r in sched.reservations:
        if r.end > r.start:
            events.append((r.start, 1))
            events.append((r.end, -1))
    peak = cur = 0
    for _, delta in sorted(events, key=lambda e: (e[0], e[1])):
        cur += delta
        peak = max(peak, cur)
    return peak
