"""Drone service composition planners.

Two planners share the payoff model (travel + wait + recharge per stop):

* ``ncg_pb_plan``: greedy, prediction-based. At each station the drone scores
  the stations it can reach by payoff plus a straight-line estimate of the
  remaining flight, using only competitors expected within a time window
  around its own ETA.
* ``ncg_ci_plan``: exhaustive baseline with complete information. Every
  simple path within a hop cap is timed against the competitors' actual
  arrivals and the fastest one wins.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .contention import StationSchedule, insert_fcfs, predicted_wait, rebuild_schedule
from .energy import effective_range, energy_fraction, recharge_duration
from .model import (
    TICKS_PER_MINUTE,
    CompositionPlan,
    DroneAgent,
    PayoffBreakdown,
    PlanLeg,
    SkywayNetwork,
    travel_time,
)


class NoPathError(RuntimeError):
    """No composition reaches the destination."""


class BudgetExceededError(RuntimeError):
    """Exhaustive enumeration hit its path budget."""


@dataclass(frozen=True)
class PlannerConfig:
    """Planner knobs.

    ``time_window`` is the half-width (minutes) around a drone's ETA inside
    which competitors are considered. ``max_hops=None`` lets the exhaustive
    planner cap paths at the minimum hop count plus ``hop_slack``.
    """

    time_window: float = 10.0
    max_hops: Optional[int] = None
    hop_slack: int = 2
    enumeration_budget: int = 1_000_000
    score: str = "sum"
    ticks_per_minute: int = TICKS_PER_MINUTE

    def __post_init__(self):
        if self.time_window < 0:
            raise ValueError("time_window must be >= 0")
        if self.max_hops is not None and self.max_hops < 1:
            raise ValueError("max_hops must be >= 1")
        if self.hop_slack < 0:
            raise ValueError("hop_slack must be >= 0")
        if self.score not in ("sum", "lexicographic"):
            raise ValueError(f"unknown score mode {self.score!r}")


@dataclass(frozen=True)
class Candidate:
    station: int
    segment: int
    payoff: PayoffBreakdown
    est_time_to_dst: int

    @property
    def score(self) -> int:
        return self.payoff.total + self.est_time_to_dst


@dataclass(frozen=True)
class ForecastEntry:
    drone: int
    arrival: int
    recharge: int


@dataclass(frozen=True)
class CompetitorForecast:
    station: int
    eta: int
    window: int
    entries: Tuple[ForecastEntry, ...] = ()
    # Live pad state (online execution only); forecast entries queue behind it.
    baseline: Optional[StationSchedule] = None


@dataclass
class World:
    """Shared state for one scenario run.

    ``plans`` holds committed (possibly partial) plans. ``true_arrivals`` maps
    station -> [(drone, arrival, recharge)] observed when the committed plans
    are executed; the exhaustive planner requires it. ``live`` and
    ``in_flight`` are filled by the online simulator.
    """

    network: SkywayNetwork
    drones: Dict[int, DroneAgent]
    config: PlannerConfig = field(default_factory=PlannerConfig)
    plans: Dict[int, CompositionPlan] = field(default_factory=dict)
    true_arrivals: Optional[Dict[int, List[Tuple[int, int, int]]]] = None
    live: Optional[Dict[int, StationSchedule]] = None
    in_flight: Optional[Dict[int, Tuple[int, int, int]]] = None

    def ticks(self, minutes: float) -> int:
        return int(round(minutes * self.config.ticks_per_minute))


def payoff(travel: int, recharge: int, wait: int) -> PayoffBreakdown:
    if min(travel, recharge, wait) < 0:
        raise ValueError("payoff components must be >= 0")
    return PayoffBreakdown(travel=travel, wait=wait, recharge=recharge)


def drone_range(drone: DroneAgent) -> float:
    return effective_range(drone.spec.energy_model(), drone.request.payload, drone.spec.max_payload)


def reachable_stations(net: SkywayNetwork, loc: int, drone: DroneAgent) -> List[Tuple[int, int]]:
    """Adjacent stations within range on the drone's current charge.

    Returns (station, segment id) pairs; distance equal to the range counts.
    """
    reach = drone_range(drone)
    limit = min(reach, reach * drone.battery_level)
    return [(v, seg.id) for v, seg in net.neighbors(loc) if seg.distance <= limit]


def _predicted_arrivals(world: World, station: int, exclude: int):
    if world.in_flight is not None:
        for pid, (st, arrival, recharge) in world.in_flight.items():
            if pid != exclude and st == station:
                yield ForecastEntry(pid, arrival, recharge)
        return
    for pid, plan in world.plans.items():
        if pid == exclude:
            continue
        dst = world.drones[pid].request.dst
        for leg in plan.legs:
            if leg.target == station and leg.target != dst:
                yield ForecastEntry(pid, leg.arrival_time, leg.recharge_time)


def forecast_competitors(world: World, station: int, eta: int, tw: float,
                         exclude: Optional[int] = None) -> CompetitorForecast:
    """Competitors predicted to reach ``station`` within ``tw`` minutes of ``eta``."""
    window = world.ticks(tw)
    entries = sorted(
        (e for e in _predicted_arrivals(world, station, exclude)
         if eta - window <= e.arrival <= eta + window),
        key=lambda e: (e.arrival, e.drone),
    )
    baseline = world.live.get(station) if world.live is not None else None
    return CompetitorForecast(station, eta, window, tuple(entries), baseline)


def _forecast_wait(net: SkywayNetwork, forecast: CompetitorForecast, drone: int,
                   eta: int, recharge: int) -> int:
    if forecast.baseline is None:
        sched = rebuild_schedule(
            net.station(forecast.station),
            [(e.drone, e.arrival, e.recharge) for e in forecast.entries] + [(drone, eta, recharge)],
        )
        return next(r.wait for r in sched.reservations if r.drone == drone)
    sched = forecast.baseline.copy()
    floor = sched.last_key
    for e in forecast.entries:
        arrival = e.arrival
        if floor is not None and (arrival, e.drone) <= floor:
            arrival = floor[0] + 1
        insert_fcfs(sched, e.drone, arrival, e.recharge)
        floor = sched.last_key
    return predicted_wait(sched, eta, recharge, drone)


def evaluate_candidate(net: SkywayNetwork, drone: DroneAgent, cur_loc: int, candidate: int,
                       forecast: CompetitorForecast, depart: Optional[int] = None,
                       ticks_per_minute: int = TICKS_PER_MINUTE) -> Tuple[PayoffBreakdown, int]:
    """Payoff of flying to ``candidate`` now, plus the remaining-flight estimate.

    ``depart`` defaults to ``forecast.eta`` minus the flight time.
    """
    seg = _segment_between(net, cur_loc, candidate)
    travel = travel_time(seg, drone.spec, ticks_per_minute)
    dst = drone.request.dst
    if candidate == dst:
        return payoff(travel, 0, 0), 0
    model = drone.spec.energy_model()
    used = energy_fraction(model, seg.distance, drone.request.payload, drone.spec.max_payload)
    deficit = min(1.0, 1.0 - drone.battery_level + used)
    recharge = recharge_duration(model, deficit, ticks_per_minute)
    eta = forecast.eta if depart is None else depart + travel
    wait = _forecast_wait(net, forecast, drone.id, eta, recharge)
    est = int(round(net.euclidean(candidate, dst) * 60.0 * ticks_per_minute / drone.spec.max_speed))
    return payoff(travel, recharge, wait), est


def select_next(candidates: Sequence[Candidate], score: str = "sum") -> int:
    """Pick the candidate with the smallest payoff + estimate.

    Ties go to the smaller estimate, then the smaller station id.
    """
    if not candidates:
        raise NoPathError("no candidate stations")
    if score == "sum":
        best = min(candidates, key=lambda c: (c.score, c.est_time_to_dst, c.station))
    else:
        best = min(candidates, key=lambda c: (c.payoff.total, c.est_time_to_dst, c.station))
    return best.station


def _segment_between(net: SkywayNetwork, u: int, v: int):
    for w, seg in net.neighbors(u):
        if w == v:
            return seg
    raise KeyError(f"no segment {u} -> {v}")


def _drone_state(world: World, drone_id: int):
    drone = world.drones[drone_id]
    plan = world.plans.get(drone_id)
    if plan is None or not plan.legs:
        return drone.request.src, drone.request.release_time, drone.battery_level
    last = plan.legs[-1]
    return last.target, last.ready_time, 1.0


def ncg_pb_step(world: World, drone_id: int, location: Optional[int] = None,
                now: Optional[int] = None, battery: Optional[float] = None,
                visited: Optional[set] = None) -> PlanLeg:
    """One decision of the greedy planner.

    Returns the leg to fly next; the leg ends at the destination when it is in
    range. Stations in ``visited`` (by default, those on the committed plan)
    are not candidates. Raises :class:`NoPathError` at a dead end.
    """
    net, cfg = world.network, world.config
    drone = world.drones[drone_id]
    loc0, now0, bat0 = _drone_state(world, drone_id)
    loc = loc0 if location is None else location
    now = now0 if now is None else now
    battery = bat0 if battery is None else battery
    if battery != drone.battery_level:
        drone = replace(drone, battery_level=battery)

    if visited is None:
        plan = world.plans.get(drone_id)
        visited = set(plan.stations) if plan is not None and plan.legs else {loc}
    options = [(st, seg) for st, seg in reachable_stations(net, loc, drone) if st not in visited]
    if not options:
        raise NoPathError(f"drone {drone_id}: no station in range of {loc}")
    dst = drone.request.dst
    tpm = cfg.ticks_per_minute
    for st, seg_id in options:
        if st == dst:
            travel = travel_time(net.segment(seg_id), drone.spec, tpm)
            return PlanLeg(seg_id, loc, dst, now, travel, 0, 0)

    evaluated = []
    for st, seg_id in options:
        eta = now + travel_time(net.segment(seg_id), drone.spec, tpm)
        fc = forecast_competitors(world, st, eta, cfg.time_window, exclude=drone_id)
        pay, est = evaluate_candidate(net, drone, loc, st, fc, depart=now, ticks_per_minute=tpm)
        evaluated.append(Candidate(st, seg_id, pay, est))
    choice = select_next(evaluated, cfg.score)
    cand = next(c for c in evaluated if c.station == choice)
    return PlanLeg(cand.segment, loc, choice, now,
                   cand.payoff.travel, cand.payoff.wait, cand.payoff.recharge)


def ncg_pb_plan(world: World, drone_id: int) -> CompositionPlan:
    """Greedy composition for one drone, committed into ``world.plans``.

    Each selected leg is committed as soon as it is chosen. On failure the
    partial plan is withdrawn and :class:`NoPathError` raised.
    """
    drone = world.drones[drone_id]
    limit = world.network.m * (world.config.max_hops or 1)
    world.plans[drone_id] = CompositionPlan(drone_id)
    try:
        for _ in range(limit):
            leg = ncg_pb_step(world, drone_id)
            world.plans[drone_id] = world.plans[drone_id].appended(leg)
            if leg.target == drone.request.dst:
                return world.plans[drone_id]
    except NoPathError:
        del world.plans[drone_id]
        raise
    del world.plans[drone_id]
    raise NoPathError(f"drone {drone_id}: gave up after {limit} greedy steps")


def hop_distances_to(net: SkywayNetwork, dst: int, max_distance: float) -> Dict[int, int]:
    """BFS hop counts to ``dst`` over segments no longer than ``max_distance``."""
    hops = {dst: 0}
    queue = deque([dst])
    while queue:
        v = queue.popleft()
        for u, seg in net.predecessors(v):
            if u not in hops and seg.distance <= max_distance:
                hops[u] = hops[v] + 1
                queue.append(u)
    return hops


def competitor_schedules(world: World) -> Dict[int, StationSchedule]:
    """FCFS schedules of the actual competitor arrivals, one per station."""
    if world.true_arrivals is None:
        raise ValueError("exhaustive planning needs world.true_arrivals")
    net = world.network
    return {st: rebuild_schedule(net.station(st), entries)
            for st, entries in world.true_arrivals.items()}


def ncg_ci_plan(world: World, drone_id: int) -> CompositionPlan:
    """Fastest composition over every simple path within the hop cap.

    Competitor arrivals are taken as known and fixed. Partial paths that can no
    longer reach the destination within the cap are not extended; every
    complete path under the cap is still timed. Ties go to fewer hops, then to
    the lexicographically smaller station sequence.
    """
    net, cfg = world.network, world.config
    drone = world.drones[drone_id]
    req = drone.request
    tpm = cfg.ticks_per_minute
    model = drone.spec.energy_model()
    reach = drone_range(drone)
    sched = {st: s for st, s in competitor_schedules(world).items()}
    for st in list(sched):
        if any(r.drone == drone_id for r in sched[st].reservations):
            sched[st] = rebuild_schedule(
                net.station(st),
                [(r.drone, r.arrival, r.end - r.start) for r in sched[st].reservations
                 if r.drone != drone_id])

    hops = hop_distances_to(net, req.dst, reach)
    if req.src not in hops:
        raise NoPathError(f"drone {drone_id}: destination unreachable")
    max_hops = cfg.max_hops if cfg.max_hops is not None else hops[req.src] + cfg.hop_slack

    travel_cache: Dict[int, int] = {}
    recharge_cache: Dict[int, int] = {}

    def leg_costs(seg, battery):
        if seg.id not in travel_cache:
            travel_cache[seg.id] = travel_time(seg, drone.spec, tpm)
            used = energy_fraction(model, seg.distance, req.payload, drone.spec.max_payload)
            recharge_cache[seg.id] = recharge_duration(model, min(1.0, used), tpm)
        if battery < 1.0:
            used = energy_fraction(model, seg.distance, req.payload, drone.spec.max_payload)
            return travel_cache[seg.id], recharge_duration(model, min(1.0, 1.0 - battery + used), tpm)
        return travel_cache[seg.id], recharge_cache[seg.id]

    best_key = None
    best_legs = None
    expanded = 0
    path = [req.src]
    on_path = {req.src}
    legs: List[PlanLeg] = []

    def extend(u: int, ready: int, battery: float):
        nonlocal best_key, best_legs, expanded
        remaining = max_hops - len(legs) - 1
        limit = reach * battery
        for v, seg in net.neighbors(u):
            if v in on_path or seg.distance > limit or hops.get(v, max_hops + 1) > remaining:
                continue
            expanded += 1
            if expanded > cfg.enumeration_budget:
                raise BudgetExceededError(
                    f"drone {drone_id}: more than {cfg.enumeration_budget} partial paths")
            travel, recharge = leg_costs(seg, battery)
            arrival = ready + travel
            if v == req.dst:
                leg = PlanLeg(seg.id, u, v, ready, travel, 0, 0)
                key = (arrival - req.release_time, len(legs) + 1, tuple(path) + (v,))
                if best_key is None or key < best_key:
                    best_key, best_legs = key, tuple(legs) + (leg,)
                continue
            s = sched.get(v)
            wait = predicted_wait(s, arrival, recharge, drone_id) if s is not None else 0
            leg = PlanLeg(seg.id, u, v, ready, travel, wait, recharge)
            legs.append(leg)
            path.append(v)
            on_path.add(v)
            extend(v, leg.ready_time, 1.0)
            on_path.discard(v)
            path.pop()
            legs.pop()

    extend(req.src, req.release_time, drone.battery_level)
    if best_legs is None:
        raise NoPathError(f"drone {drone_id}: no path within {max_hops} hops")
    return CompositionPlan(drone_id, best_legs)


def realized_arrivals(world: World) -> Dict[int, List[Tuple[int, int, int]]]:
    """Arrivals at intermediate stations when committed plans are executed."""
    from .sim import simulate

    complete = {pid: p for pid, p in world.plans.items()
                if p.legs and p.legs[-1].target == world.drones[pid].request.dst}
    trace = simulate(world, complete)
    out: Dict[int, List[Tuple[int, int, int]]] = {}
    for st, sched in trace.schedules.items():
        out[st] = [(r.drone, r.arrival, r.end - r.start) for r in sched.reservations]
    return out


def planning_order(world: World) -> List[int]:
    return sorted(world.drones, key=lambda pid: (world.drones[pid].request.release_time, pid))


def plan_all_players(world: World, planner: str = "pb") -> Dict[int, Optional[CompositionPlan]]:
    """Plan every drone in (release_time, id) order.

    Later drones see the plans committed by earlier ones. Drones without a
    composition map to ``None``; the others are still planned.
    """
    if planner not in ("pb", "ci"):
        raise ValueError(f"unknown planner {planner!r}")
    results: Dict[int, Optional[CompositionPlan]] = {}
    for pid in planning_order(world):
        try:
            if planner == "pb":
                results[pid] = ncg_pb_plan(world, pid)
            else:
                world.true_arrivals = realized_arrivals(world)
                plan = ncg_ci_plan(world, pid)
                world.plans[pid] = plan
                results[pid] = plan
        except (NoPathError, BudgetExceededError):
            results[pid] = None
    return results
