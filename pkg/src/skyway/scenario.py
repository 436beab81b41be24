"""Scenario generation and file I/O.

Scenario files are JSON documents with a mandatory ``format_version``; see
the README for the field layout.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import networkx as nx
import numpy as np
from scipy.spatial import cKDTree

from .energy import effective_range
from .model import (
    DJI_M200_V2,
    DeliveryRequest,
    DroneAgent,
    DroneSpec,
    SkywayNetwork,
    Segment,
    Station,
    validate_network,
)
from .planner import PlannerConfig, World

FORMAT_VERSION = 1
EARTH_RADIUS_KM = 6371.0088


class GenerationError(RuntimeError):
    pass


class ScenarioFormatError(ValueError):
    """Malformed scenario or node file; the message names the line or field."""


@dataclass(frozen=True)
class ScenarioConfig:
    node_count: int = 100
    area_side: float = 40.0
    max_edge_length: float = 12.0
    pad_count_range: Tuple[int, int] = (1, 3)
    player_count: int = 4
    drone_spec: DroneSpec = DJI_M200_V2
    planner_config: PlannerConfig = field(default_factory=PlannerConfig)
    jitter: float = 10.0
    seed: int = 0
    release_horizon: float = 120.0
    max_retries: int = 200

    def __post_init__(self):
        if self.node_count < 2:
            raise ValueError("node_count must be >= 2")
        if self.area_side <= 0 or self.max_edge_length <= 0:
            raise ValueError("area_side and max_edge_length must be > 0")
        lo, hi = self.pad_count_range
        if not 1 <= lo <= hi:
            raise ValueError(f"bad pad_count_range {self.pad_count_range}")
        if self.player_count < 0:
            raise ValueError("player_count must be >= 0")
        if self.max_edge_length > self.drone_spec.base_range:
            raise ValueError(
                f"max_edge_length {self.max_edge_length} km exceeds the zero-payload "
                f"range {self.drone_spec.base_range} km")
        if self.jitter < 0 or self.release_horizon < 0:
            raise ValueError("jitter and release_horizon must be >= 0")


@dataclass
class Scenario:
    network: SkywayNetwork
    requests: List[DeliveryRequest]
    drone_spec: DroneSpec = DJI_M200_V2
    planner_config: PlannerConfig = field(default_factory=PlannerConfig)
    seed: int = 0
    jitter: float = 0.0

    def world(self, config: Optional[PlannerConfig] = None) -> World:
        drones = {r.id: DroneAgent(r.id, self.drone_spec, r) for r in self.requests}
        return World(self.network, drones, config or self.planner_config)


def _edges_within(points: np.ndarray, radius: float):
    tree = cKDTree(points)
    return sorted(tuple(sorted(p)) for p in tree.query_pairs(radius))


def _build_network(points: np.ndarray, pads: List[int], radius: float,
                   extra: List[Tuple[int, int]] = ()) -> SkywayNetwork:
    stations = [Station(i, (float(x), float(y)), int(p))
                for i, ((x, y), p) in enumerate(zip(points, pads))]
    pairs = sorted(set(_edges_within(points, radius)) | {tuple(sorted(e)) for e in extra})
    segments = [
        Segment(k, int(i), int(j), float(math.hypot(*(points[i] - points[j]))))
        for k, (i, j) in enumerate(pairs)
    ]
    return SkywayNetwork(stations, segments)


def _components(n: int, pairs) -> List[set]:
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from(pairs)
    return sorted(nx.connected_components(g), key=lambda c: (-len(c), min(c)))


def _place_connected(rng: np.random.Generator, n: int, side: float, radius: float,
                     retries: int) -> np.ndarray:
    """Uniform positions, re-drawing stations outside the main component.

    Only the stray stations are moved, so every edge stays within ``radius``.
    """
    points = rng.uniform(0.0, side, size=(n, 2))
    for _ in range(retries):
        comps = _components(n, _edges_within(points, radius))
        if len(comps) == 1:
            return points
        stray = sorted(set().union(*comps[1:]))
        points[stray] = rng.uniform(0.0, side, size=(len(stray), 2))
    raise GenerationError(
        f"could not connect {n} stations with edges <= {radius} km in a {side} km square "
        f"after {retries} attempts")


def generate(config: ScenarioConfig) -> Tuple[SkywayNetwork, List[DeliveryRequest]]:
    """Random connected skyway network plus delivery requests, fixed by ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    n = config.node_count
    points = _place_connected(rng, n, config.area_side, config.max_edge_length, config.max_retries)
    lo, hi = config.pad_count_range
    pads = rng.integers(lo, hi + 1, size=n).tolist()
    net = _build_network(points, pads, config.max_edge_length)

    tpm = config.planner_config.ticks_per_minute
    spec = config.drone_spec
    requests = []
    for pid in range(config.player_count):
        src, dst = (int(v) for v in rng.choice(n, size=2, replace=False))
        payload = round(float(rng.uniform(0.0, spec.max_payload)), 2)
        release = int(rng.integers(0, int(config.release_horizon) + 1)) * tpm
        requests.append(DeliveryRequest(pid, src, dst, min(payload, spec.max_payload), release))
    return net, requests


def scenario_from_config(config: ScenarioConfig) -> Scenario:
    net, requests = generate(config)
    return Scenario(net, requests, config.drone_spec, config.planner_config,
                    config.seed, config.jitter)


def import_nodes_csv(path, config: ScenarioConfig, dedup_radius: float = 0.05) -> SkywayNetwork:
    """Build a network from a coordinates CSV.

    Accepts ``x,y`` columns in km or ``lat``/``lon`` (``latitude``/``longitude``)
    in degrees; other columns such as altitude or timestamps are ignored.
    Points within ``dedup_radius`` km of an earlier kept point are merged.
    Disconnected parts are joined by their shortest bridging segments, as long
    as a bridge stays within the drone's zero-payload range.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = [h.strip().lower() for h in (reader.fieldnames or [])]
        cols = {h.strip().lower(): h for h in (reader.fieldnames or [])}
        if {"x", "y"} <= set(header):
            kind, keys = "xy", (cols["x"], cols["y"])
        else:
            lat = next((cols[k] for k in ("lat", "latitude") if k in cols), None)
            lon = next((cols[k] for k in ("lon", "lng", "long", "longitude") if k in cols), None)
            if lat is None or lon is None:
                raise ScenarioFormatError(f"{path}: header needs x,y or lat,lon columns, got {header}")
            kind, keys = "latlon", (lat, lon)
        raw = []
        for lineno, row in enumerate(reader, start=2):
            try:
                raw.append((float(row[keys[0]]), float(row[keys[1]])))
            except (TypeError, ValueError):
                raise ScenarioFormatError(f"{path}:{lineno}: non-numeric coordinate") from None
    if not raw:
        raise GenerationError(f"{path}: no data rows")
    arr = np.asarray(raw, dtype=float)
    if kind == "latlon":
        lat0 = math.radians(arr[:, 0].mean())
        lat, lon = np.radians(arr[:, 0]), np.radians(arr[:, 1])
        x = EARTH_RADIUS_KM * (lon - lon.mean()) * math.cos(lat0)
        y = EARTH_RADIUS_KM * (lat - lat.mean())
        arr = np.column_stack([x, y])

    keep = np.ones(len(arr), dtype=bool)
    tree = cKDTree(arr)
    for i in range(len(arr)):
        if keep[i]:
            for j in tree.query_ball_point(arr[i], dedup_radius):
                if j > i:
                    keep[j] = False
    points = arr[keep]
    if len(points) < 2:
        raise GenerationError(f"{path}: fewer than 2 distinct points after de-duplication")

    n = len(points)
    pairs = _edges_within(points, config.max_edge_length)
    bridges = []
    comps = _components(n, pairs)
    limit = config.drone_spec.base_range
    while len(comps) > 1:
        main = sorted(comps[0])
        others = sorted(set().union(*comps[1:]))
        d, idx = cKDTree(points[main]).query(points[others])
        k = int(np.argmin(d))
        if d[k] > limit:
            raise GenerationError(
                f"{path}: cannot connect stations; shortest bridge {d[k]:.2f} km exceeds range")
        bridges.append((main[int(idx[k])], others[k]))
        comps = _components(n, pairs + bridges)

    rng = np.random.default_rng(config.seed)
    lo, hi = config.pad_count_range
    pads = rng.integers(lo, hi + 1, size=n).tolist()
    return _build_network(points, pads, config.max_edge_length, bridges)


# -- serialisation ---------------------------------------------------------

def scenario_to_dict(s: Scenario) -> dict:
    net = s.network
    return {
        "format_version": FORMAT_VERSION,
        "seed": s.seed,
        "jitter": s.jitter,
        "drone": asdict(s.drone_spec),
        "planner": asdict(s.planner_config),
        "network": {
            "directed": net.directed,
            "stations": [
                {"id": st.id, "x": st.position[0], "y": st.position[1], "pads": st.pad_count}
                for st in net.stations
            ],
            "segments": [
                {"id": seg.id, "from": seg.source, "to": seg.target, "distance": seg.distance}
                for seg in net.segments
            ],
        },
        "requests": [
            {"id": r.id, "src": r.src, "dst": r.dst, "payload": r.payload, "release": r.release_time}
            for r in s.requests
        ],
    }


def _need(obj, key, where, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise ScenarioFormatError(f"missing field {where}.{key}")
    value = obj[key]
    if kind is None:
        return value
    if isinstance(value, bool) or not isinstance(value, kind):
        raise ScenarioFormatError(f"field {where}.{key} has wrong type {type(value).__name__}")
    return value


def scenario_from_dict(doc: dict) -> Scenario:
    version = _need(doc, "format_version", "scenario", int)
    if version != FORMAT_VERSION:
        raise ScenarioFormatError(f"unsupported format_version {version}")
    num = (int, float)
    try:
        spec = DroneSpec(**_need(doc, "drone", "scenario", dict))
        pc = dict(_need(doc, "planner", "scenario", dict))
        planner = PlannerConfig(**pc)
    except TypeError as exc:
        raise ScenarioFormatError(f"bad drone/planner block: {exc}") from None
    except ValueError as exc:
        raise ScenarioFormatError(str(exc)) from None
    net_doc = _need(doc, "network", "scenario", dict)
    stations = []
    for i, st in enumerate(_need(net_doc, "stations", "network", list)):
        where = f"network.stations[{i}]"
        pads = _need(st, "pads", where, int)
        if pads < 1:
            raise ScenarioFormatError(f"{where}.pads must be >= 1, got {pads}")
        stations.append(Station(_need(st, "id", where, int),
                                (float(_need(st, "x", where, num)), float(_need(st, "y", where, num))),
                                pads))
    segments = []
    for i, seg in enumerate(_need(net_doc, "segments", "network", list)):
        where = f"network.segments[{i}]"
        segments.append(Segment(_need(seg, "id", where, int), _need(seg, "from", where, int),
                                _need(seg, "to", where, int), float(_need(seg, "distance", where, num))))
    net = SkywayNetwork(stations, segments, bool(net_doc.get("directed", False)))
    problems = validate_network(net)
    if problems:
        raise ScenarioFormatError("invalid network: " + "; ".join(problems))
    requests = []
    for i, r in enumerate(_need(doc, "requests", "scenario", list)):
        where = f"requests[{i}]"
        try:
            req = DeliveryRequest(_need(r, "id", where, int), _need(r, "src", where, int),
                                  _need(r, "dst", where, int), float(_need(r, "payload", where, num)),
                                  _need(r, "release", where, int))
        except ValueError as exc:
            raise ScenarioFormatError(f"{where}: {exc}") from None
        for end in (req.src, req.dst):
            if end not in {s.id for s in stations}:
                raise ScenarioFormatError(f"{where}: unknown station {end}")
        if req.payload > spec.max_payload:
            raise ScenarioFormatError(f"{where}: payload exceeds drone max_payload")
        requests.append(req)
    return Scenario(net, requests, spec, planner, _need(doc, "seed", "scenario", int),
                    float(_need(doc, "jitter", "scenario", num)))


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2) + "\n")


def load_scenario(path) -> Scenario:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return scenario_from_dict(doc)
