"""Domain types for skyway networks, drones, requests and composition plans.

All times are integer ticks. One tick is ``1 / ticks_per_minute`` minutes
(0.01 min by default), which keeps payoff sums exact and makes FCFS ties
deterministic across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

TICKS_PER_MINUTE = 100


def to_ticks(minutes: float, ticks_per_minute: int = TICKS_PER_MINUTE) -> int:
    return int(round(minutes * ticks_per_minute))


def to_minutes(ticks: int, ticks_per_minute: int = TICKS_PER_MINUTE) -> float:
    return ticks / ticks_per_minute


@dataclass(frozen=True)
class Station:
    """A rooftop node. ``position`` is (x, y) in km."""

    id: int
    position: Tuple[float, float]
    pad_count: int = 1


@dataclass(frozen=True)
class Segment:
    id: int
    source: int
    target: int
    distance: float


class SkywayNetwork:
    """Stations joined by flyable line segments.

    Segments are bidirectional unless ``directed`` is set. The object is not
    validated on construction; call :func:`validate_network` for a report.
    """

    def __init__(self, stations, segments, directed: bool = False):
        self.stations: Tuple[Station, ...] = tuple(stations)
        self.segments: Tuple[Segment, ...] = tuple(segments)
        self.directed = directed
        self._by_id = {s.id: s for s in self.stations}
        self.adjacency: Dict[int, List[Tuple[int, int]]] = {s.id: [] for s in self.stations}
        self._reverse: Dict[int, List[Tuple[int, int]]] = {s.id: [] for s in self.stations}
        self._segment_by_id = {seg.id: seg for seg in self.segments}
        for seg in self.segments:
            self.adjacency.setdefault(seg.source, []).append((seg.target, seg.id))
            self._reverse.setdefault(seg.target, []).append((seg.source, seg.id))
            if not directed:
                self.adjacency.setdefault(seg.target, []).append((seg.source, seg.id))
                self._reverse.setdefault(seg.source, []).append((seg.target, seg.id))
        for lst in self.adjacency.values():
            lst.sort()
        for lst in self._reverse.values():
            lst.sort()

    def __eq__(self, other):
        if not isinstance(other, SkywayNetwork):
            return NotImplemented
        return (self.stations, self.segments, self.directed) == (
            other.stations, other.segments, other.directed)

    def __repr__(self):
        return f"SkywayNetwork(m={len(self.stations)}, segments={len(self.segments)})"

    @property
    def m(self) -> int:
        return len(self.stations)

    def station(self, station_id: int) -> Station:
        return self._by_id[station_id]

    def segment(self, segment_id: int) -> Segment:
        return self._segment_by_id[segment_id]

    def neighbors(self, station_id: int) -> List[Tuple[int, Segment]]:
        return [(v, self._segment_by_id[sid]) for v, sid in self.adjacency.get(station_id, ())]

    def predecessors(self, station_id: int) -> List[Tuple[int, Segment]]:
        return [(u, self._segment_by_id[sid]) for u, sid in self._reverse.get(station_id, ())]

    def euclidean(self, a: int, b: int) -> float:
        pa, pb = self._by_id[a].position, self._by_id[b].position
        return math.hypot(pa[0] - pb[0], pa[1] - pb[1])

    def to_networkx(self):
        import networkx as nx

        g = nx.DiGraph() if self.directed else nx.Graph()
        for s in self.stations:
            g.add_node(s.id, pos=s.position, pads=s.pad_count)
        for seg in self.segments:
            g.add_edge(seg.source, seg.target, id=seg.id, distance=seg.distance)
        return g


@dataclass(frozen=True)
class DroneSpec:
    """Intrinsic drone parameters.

    ``battery_capacity`` is normalised to 1.0; ``battery_mah`` is descriptive
    only. ``flight_time`` (minutes) is the nominal endurance used for the
    range/speed consistency check.
    """

    max_speed: float
    max_payload: float
    base_range: float
    full_recharge_duration: float
    flight_time: Optional[float] = None
    battery_capacity: float = 1.0
    battery_mah: Optional[float] = None
    payload_derating: float = 0.25
    recharge_mode: str = "full-fixed"
    name: str = "drone"

    def __post_init__(self):
        for attr in ("max_speed", "max_payload", "base_range",
                     "full_recharge_duration", "battery_capacity"):
            if not getattr(self, attr) > 0:
                raise ValueError(f"DroneSpec.{attr} must be > 0, got {getattr(self, attr)!r}")
        if self.flight_time is not None:
            if self.flight_time <= 0:
                raise ValueError("DroneSpec.flight_time must be > 0")
            if self.base_range > self.max_speed * self.flight_time / 60.0 + 1e-9:
                raise ValueError(
                    f"base_range {self.base_range} km exceeds max_speed x flight_time "
                    f"({self.max_speed * self.flight_time / 60.0:.4f} km)")
        if not 0.0 <= self.payload_derating < 1.0:
            raise ValueError("payload_derating must lie in [0, 1)")
        if self.recharge_mode not in ("full-fixed", "proportional"):
            raise ValueError(f"unknown recharge_mode {self.recharge_mode!r}")

    def energy_model(self):
        from .energy import EnergyModel

        return EnergyModel(
            base_range=self.base_range,
            payload_derating=self.payload_derating,
            recharge_mode=self.recharge_mode,
            full_recharge_duration=self.full_recharge_duration,
        )


# DJI M200 V2 as used in the reference experiments.
DJI_M200_V2 = DroneSpec(
    max_speed=81.0,
    max_payload=1.45,
    base_range=32.4,
    full_recharge_duration=60.0,
    flight_time=24.0,
    battery_mah=4280.0,
    name="DJI M200 V2",
)


@dataclass(frozen=True)
class DeliveryRequest:
    id: int
    src: int
    dst: int
    payload: float
    release_time: int = 0

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError(f"request {self.id}: src and dst are both {self.src}")
        if self.payload < 0:
            raise ValueError(f"request {self.id}: negative payload")
        if self.release_time < 0:
            raise ValueError(f"request {self.id}: negative release_time")


@dataclass(frozen=True)
class DroneAgent:
    """A player: one drone carrying one request."""

    id: int
    spec: DroneSpec
    request: DeliveryRequest
    battery_level: float = 1.0

    def __post_init__(self):
        if self.request.payload > self.spec.max_payload:
            raise ValueError(
                f"drone {self.id}: payload {self.request.payload} exceeds "
                f"max_payload {self.spec.max_payload}")
        if not 0.0 <= self.battery_level <= 1.0:
            raise ValueError(f"drone {self.id}: battery_level outside [0, 1]")


@dataclass(frozen=True)
class PlanLeg:
    segment: int
    source: int
    target: int
    depart_time: int
    travel_time: int
    wait_time: int = 0
    recharge_time: int = 0

    def __post_init__(self):
        if min(self.travel_time, self.wait_time, self.recharge_time) < 0:
            raise ValueError(f"negative time component in {self}")

    @property
    def arrival_time(self) -> int:
        return self.depart_time + self.travel_time

    @property
    def recharge_start(self) -> int:
        return self.arrival_time + self.wait_time

    @property
    def ready_time(self) -> int:
        return self.recharge_start + self.recharge_time

    @property
    def payoff(self) -> int:
        return self.travel_time + self.wait_time + self.recharge_time


@dataclass(frozen=True)
class PayoffBreakdown:
    travel: int
    wait: int
    recharge: int

    @property
    def total(self) -> int:
        return self.travel + self.wait + self.recharge


@dataclass(frozen=True)
class CompositionPlan:
    drone: int
    legs: Tuple[PlanLeg, ...] = field(default_factory=tuple)

    @property
    def total_time(self) -> int:
        return sum(leg.payoff for leg in self.legs)

    @property
    def stops(self) -> int:
        """Number of contested stations, i.e. the leg count."""
        return len(self.legs)

    @property
    def stations(self) -> Tuple[int, ...]:
        if not self.legs:
            return ()
        return (self.legs[0].source,) + tuple(leg.target for leg in self.legs)

    def appended(self, leg: PlanLeg) -> "CompositionPlan":
        return CompositionPlan(self.drone, self.legs + (leg,))

    def to_dict(self) -> dict:
        return {
            "drone": self.drone,
            "total_time": self.total_time,
            "legs": [
                {
                    "segment": leg.segment,
                    "from": leg.source,
                    "to": leg.target,
                    "depart": leg.depart_time,
                    "travel": leg.travel_time,
                    "wait": leg.wait_time,
                    "recharge": leg.recharge_time,
                }
                for leg in self.legs
            ],
        }


def check_plan(plan: CompositionPlan, request: DeliveryRequest, complete: bool = True) -> List[str]:
    """Return a list of invariant violations for ``plan`` (empty when sound)."""
    problems = []
    legs = plan.legs
    if not legs:
        return ["empty plan"] if complete else []
    if legs[0].source != request.src:
        problems.append(f"first leg starts at {legs[0].source}, expected src {request.src}")
    if complete and legs[-1].target != request.dst:
        problems.append(f"last leg ends at {legs[-1].target}, expected dst {request.dst}")
    for a, b in zip(legs, legs[1:]):
        if a.target != b.source:
            problems.append(f"legs not contiguous: {a.target} -> {b.source}")
        if b.depart_time < a.ready_time:
            problems.append(f"leg from {b.source} departs before recharge completes")
    if legs[0].depart_time < request.release_time:
        problems.append("departs before release")
    if plan.total_time != sum(l.travel_time + l.wait_time + l.recharge_time for l in legs):
        problems.append("total_time differs from leg sum")
    return problems


def travel_time(segment: Segment, spec: DroneSpec, ticks_per_minute: int = TICKS_PER_MINUTE) -> int:
    """Flight time over ``segment`` at ``spec.max_speed``, in ticks."""
    return int(round(segment.distance * 60.0 * ticks_per_minute / spec.max_speed))


def validate_network(net: SkywayNetwork) -> List[str]:
    """Lint a network. Returns one message per violation, each naming the element."""
    report = []
    ids = [s.id for s in net.stations]
    if len(set(ids)) != len(ids):
        seen = set()
        for i in ids:
            if i in seen:
                report.append(f"station {i}: duplicate id")
            seen.add(i)
    if sorted(set(ids)) != list(range(len(set(ids)))):
        report.append("station ids are not dense in [0, m)")
    for s in net.stations:
        if not (isinstance(s.pad_count, int) and s.pad_count >= 1):
            report.append(f"station {s.id}: pad_count {s.pad_count!r} < 1")
    known = set(ids)
    seg_ids = set()
    for seg in net.segments:
        if seg.id in seg_ids:
            report.append(f"segment {seg.id}: duplicate id")
        seg_ids.add(seg.id)
        for end in (seg.source, seg.target):
            if end not in known:
                report.append(f"segment {seg.id}: dangling endpoint {end}")
        if seg.source == seg.target:
            report.append(f"segment {seg.id}: self-loop at {seg.source}")
        if not seg.distance > 0:
            report.append(f"segment {seg.id}: non-positive distance {seg.distance}")
    return report
