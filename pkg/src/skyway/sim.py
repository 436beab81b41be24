"""Discrete-event execution of composition plans.

Waits are resolved at run time from the actual FCFS arrival order, so
predicted waits from planning may be overturned by jitter or by drones that
planned later.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple

import numpy as np

from .contention import StationSchedule, insert_fcfs
from .energy import energy_fraction
from .model import CompositionPlan, PlanLeg
from .planner import NoPathError, World, ncg_pb_step

KIND_PRIORITY = {"arrive": 0, "deliver": 1, "recharge_end": 2, "recharge_start": 3, "depart": 4}


@dataclass(frozen=True)
class Event:
    time: int
    kind: str
    drone: int
    location: int

    def sort_key(self):
        return (self.time, KIND_PRIORITY[self.kind], self.drone)


@dataclass(frozen=True)
class JitterModel:
    """Uniform noise in [-delta, +delta] minutes added to every leg's flight time."""

    delta: float = 10.0
    seed: int = 0

    def offset(self, drone: int, leg_index: int, ticks_per_minute: int) -> int:
        if self.delta <= 0:
            return 0
        rng = np.random.default_rng((self.seed, drone, leg_index))
        return int(round(rng.uniform(-self.delta, self.delta) * ticks_per_minute))


@dataclass
class ExecutionTrace:
    events: List[Event] = field(default_factory=list)
    delivery_time: Dict[int, int] = field(default_factory=dict)
    schedules: Dict[int, StationSchedule] = field(default_factory=dict)
    legs: Dict[int, List[PlanLeg]] = field(default_factory=dict)
    battery_log: Dict[int, List[float]] = field(default_factory=dict)
    stranded: Set[int] = field(default_factory=set)
    energy_violations: List[Tuple[int, int]] = field(default_factory=list)

    def to_lines(self, ticks_per_minute: int = 100) -> List[str]:
        digits = max(0, len(str(ticks_per_minute)) - 1)
        lines = ["time,kind,drone,location"]
        for e in self.events:
            lines.append(f"{e.time / ticks_per_minute:.{digits}f},{e.kind},{e.drone},{e.location}")
        return lines

    def write(self, path, ticks_per_minute: int = 100) -> None:
        with open(path, "w") as fh:
            fh.write("\n".join(self.to_lines(ticks_per_minute)) + "\n")


class _Engine:
    """Shared bookkeeping for offline and online runs."""

    def __init__(self, world: World, jitter: Optional[JitterModel]):
        self.world = world
        self.jitter = jitter
        self.tpm = world.config.ticks_per_minute
        self.trace = ExecutionTrace()
        self.schedules = {
            s.id: StationSchedule(s.id, s.pad_count) for s in world.network.stations
        }
        self.queue: List[tuple] = []
        self.battery: Dict[int, float] = {}
        self._seq = 0

    def push(self, time: int, kind: str, drone: int, payload):
        heapq.heappush(self.queue, (time, KIND_PRIORITY[kind], drone, self._seq, kind, payload))
        self._seq += 1

    def emit(self, time, kind, drone, location):
        self.trace.events.append(Event(time, kind, drone, location))

    def fly(self, drone_id: int, leg: PlanLeg, depart: int):
        """Start ``leg`` at ``depart``; schedules the arrival."""
        agent = self.world.drones[drone_id]
        seg = self.world.network.segment(leg.segment)
        idx = len(self.trace.legs.setdefault(drone_id, []))
        travel = leg.travel_time
        if self.jitter is not None:
            travel = travel + self.jitter.offset(drone_id, idx, self.tpm)
            # Zero-length flights would let a drone re-enter the same instant.
            travel = max(travel, 1 if seg.distance > 0 else 0)
        model = agent.spec.energy_model()
        level = self.battery.get(drone_id, agent.battery_level)
        try:
            used = energy_fraction(model, seg.distance, agent.request.payload, agent.spec.max_payload)
        except ValueError:
            used = float("inf")
        level -= used
        if level < -1e-12:
            self.trace.energy_violations.append((drone_id, idx))
        self.battery[drone_id] = level
        self.trace.battery_log.setdefault(drone_id, []).append(level)
        self.emit(depart, "depart", drone_id, leg.source)
        realized = PlanLeg(leg.segment, leg.source, leg.target, depart, travel, 0, leg.recharge_time)
        self.trace.legs[drone_id].append(realized)
        self.push(depart + travel, "arrive", drone_id, realized)

    def arrive(self, time: int, drone_id: int, leg: PlanLeg) -> Optional[int]:
        """Land; returns recharge end time, or None when delivered."""
        agent = self.world.drones[drone_id]
        self.emit(time, "arrive", drone_id, leg.target)
        if leg.target == agent.request.dst:
            self.emit(time, "deliver", drone_id, leg.target)
            self.trace.delivery_time[drone_id] = time - agent.request.release_time
            return None
        res, wait = insert_fcfs(self.schedules[leg.target], drone_id, time, leg.recharge_time)
        self.trace.legs[drone_id][-1] = replace(leg, wait_time=wait)
        self.emit(res.start, "recharge_start", drone_id, leg.target)
        self.emit(res.end, "recharge_end", drone_id, leg.target)
        return res.end

    def finish(self) -> ExecutionTrace:
        self.trace.events.sort(key=Event.sort_key)
        self.trace.schedules = {st: s for st, s in self.schedules.items() if s.reservations}
        return self.trace


def simulate(world: World, plans, jitter: Optional[JitterModel] = None) -> ExecutionTrace:
    """Execute committed plans.

    ``plans`` maps drone id to plan (or is an iterable of plans). Drones with
    no plan are reported as stranded.
    """
    if isinstance(plans, Mapping):
        by_drone = {pid: p for pid, p in plans.items()}
    else:
        by_drone = {p.drone: p for p in plans if p is not None}
    eng = _Engine(world, jitter)
    for pid, plan in sorted(by_drone.items()):
        if plan is None or not plan.legs:
            eng.trace.stranded.add(pid)
            continue
        eng.push(world.drones[pid].request.release_time, "depart", pid, (plan, 0))
    while eng.queue:
        time, _, pid, _, kind, payload = heapq.heappop(eng.queue)
        if kind == "depart":
            plan, idx = payload
            eng.fly(pid, plan.legs[idx], time)
        else:
            leg = payload
            end = eng.arrive(time, pid, leg)
            if end is not None:
                plan = by_drone[pid]
                idx = len(eng.trace.legs[pid])
                eng.battery[pid] = 1.0
                eng.push(end, "depart", pid, (plan, idx))
    return eng.finish()


def simulate_online(world: World, planner: str = "pb", jitter: Optional[JitterModel] = None) -> ExecutionTrace:
    """Run every drone with the greedy planner deciding at each stop.

    Decisions happen at the source at release time and at each recharge end,
    using the live pad state of every station and the announced next hop of
    drones in the air. A drone with no way forward is marked stranded.
    """
    if planner != "pb":
        raise ValueError("online execution supports only the greedy planner")
    eng = _Engine(world, jitter)
    live = World(
        network=world.network,
        drones=world.drones,
        config=world.config,
        live=eng.schedules,
        in_flight={},
    )
    visited: Dict[int, set] = {}
    for pid, agent in sorted(world.drones.items()):
        eng.push(agent.request.release_time, "depart", pid, agent.request.src)
    while eng.queue:
        time, _, pid, _, kind, payload = heapq.heappop(eng.queue)
        if kind == "depart":
            location = payload
            battery = eng.battery.get(pid, world.drones[pid].battery_level)
            seen = visited.setdefault(pid, {location})
            try:
                leg = ncg_pb_step(live, pid, location=location, now=time, battery=battery,
                                  visited=seen)
            except NoPathError:
                eng.trace.stranded.add(pid)
                continue
            seen.add(leg.target)
            if leg.target != world.drones[pid].request.dst:
                live.in_flight[pid] = (leg.target, leg.arrival_time, leg.recharge_time)
            eng.fly(pid, leg, time)
        else:
            leg = payload
            live.in_flight.pop(pid, None)
            end = eng.arrive(time, pid, leg)
            if end is not None:
                eng.battery[pid] = 1.0
                eng.push(end, "depart", pid, leg.target)
    return eng.finish()
