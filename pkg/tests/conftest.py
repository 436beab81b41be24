import math
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from skyway.model import DJI_M200_V2, DeliveryRequest, DroneAgent, DroneSpec, Segment, SkywayNetwork, Station
from skyway.planner import PlannerConfig, World


def make_net(positions, edges, pads=1, directed=False):
    """Network from {id: (x, y)} and [(u, v)]; distances are Euclidean."""
    if isinstance(pads, int):
        pads = {i: pads for i in positions}
    stations = [Station(i, positions[i], pads[i]) for i in sorted(positions)]
    segments = []
    for k, (u, v) in enumerate(edges):
        (x1, y1), (x2, y2) = positions[u], positions[v]
        segments.append(Segment(k, u, v, math.hypot(x2 - x1, y2 - y1)))
    return SkywayNetwork(stations, segments, directed=directed)


def make_world(net, requests, spec=DJI_M200_V2, config=None):
    drones = {r.id: DroneAgent(r.id, spec, r) for r in requests}
    return World(net, drones, config or PlannerConfig())


@pytest.fixture
def fork_net():
    """S=0 with a near station A=1 and a farther one B=2, both linking to D=3.

    E=4 feeds competitors into A.
    """
    positions = {0: (0.0, 0.0), 1: (10.0, 0.0), 2: (15.0, 8.0), 3: (40.0, 0.0), 4: (10.0, -10.0)}
    edges = [(0, 1), (0, 2), (1, 3), (2, 3), (4, 1)]
    return make_net(positions, edges)


@pytest.fixture
def request_sd():
    return DeliveryRequest(5, 0, 3, 0.0, 0)


def random_instance(rng, max_nodes=8, max_players=3, max_pads=3):
    """Small random network, one drone, and fixed competitor arrivals.

    Returns (net, drone, competitors) where competitors maps station ->
    [(drone, arrival, duration)] in ticks.
    """
    n = rng.randint(3, max_nodes)
    positions = {i: (rng.uniform(0, 35), rng.uniform(0, 35)) for i in range(n)}
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.5]
    if not edges:
        edges = [(0, 1)]
    pads = {i: min(max_pads, rng.choice([1, 1, 2, 3])) for i in range(n)}
    net = make_net(positions, edges, pads)
    mode = rng.choice(["full-fixed", "proportional"])
    spec = DroneSpec(81, 1.45, 32.4, 60, flight_time=24, recharge_mode=mode)
    src, dst = rng.sample(range(n), 2)
    if rng.random() < 0.8:
        # far-apart endpoints make multi-stop routes, and contention, likely
        src, dst = max(((u, v) for u in range(n) for v in range(n) if u != v),
                       key=lambda p: (math.dist(positions[p[0]], positions[p[1]]), rng.random()))
    me = rng.randint(0, 5)
    release = rng.choice([0, 0, 300])
    drone = DroneAgent(me, spec, DeliveryRequest(me, src, dst, round(rng.uniform(0, 1.45), 2), release))
    competitors = {}
    others = [i for i in range(6) if i != me][:rng.randint(0, max_players - 1)]
    for pid in others:
        t = rng.randrange(0, 2500, 25)
        for st in rng.sample(range(n), rng.randint(1, min(3, n))):
            competitors.setdefault(st, []).append((pid, t, rng.choice([600, 3000, 6000])))
            t += rng.randrange(500, 7000, 50)
        hubs = [(v, seg.distance) for v, seg in net.neighbors(src) if v != dst]
        if hubs and rng.random() < 0.8 and not any(
                e[0] == pid for v, _ in hubs for e in competitors.get(v, [])):
            # land just before (or exactly with) the drone at a first-hop station
            v, d = rng.choice(hubs)
            eta = release + int(round(d * 6000 / spec.max_speed))
            arrival = max(0, eta - rng.choice([0, 0, 25, 500, 2000, 5000]))
            competitors.setdefault(v, []).append((pid, arrival, 6000))
    return net, drone, competitors
