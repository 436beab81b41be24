"""Command line entry point: ``skyway {generate,plan,simulate,sweep,validate}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .experiment import emit_metrics, run_sweep
from .model import check_plan, to_minutes, validate_network
from .planner import plan_all_players
from .scenario import (
    ScenarioConfig,
    ScenarioFormatError,
    load_scenario,
    save_scenario,
    scenario_from_config,
)
from .sim import JitterModel, simulate, simulate_online


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _planner_config(scen, args):
    cfg = scen.planner_config
    if args.tw is not None:
        cfg = replace(cfg, time_window=args.tw)
    if getattr(args, "max_hops", None) is not None:
        cfg = replace(cfg, max_hops=args.max_hops)
    return cfg


def cmd_generate(args):
    base = ScenarioConfig()
    cfg = ScenarioConfig(
        node_count=args.nodes[0] if args.nodes else base.node_count,
        area_side=args.area,
        max_edge_length=args.edge,
        player_count=args.players,
        jitter=args.jitter if args.jitter is not None else base.jitter,
        seed=args.seed,
        planner_config=replace(base.planner_config,
                               time_window=args.tw if args.tw is not None else base.planner_config.time_window),
    )
    scen = scenario_from_config(cfg)
    out = Path(args.out or "scenario.json")
    save_scenario(scen, out)
    print(f"wrote {out} ({scen.network.m} stations, {len(scen.network.segments)} segments, "
          f"{len(scen.requests)} requests)")


def cmd_plan(args):
    scen = load_scenario(args.scenario)
    world = scen.world(_planner_config(scen, args))
    plans = plan_all_players(world, args.planner)
    tpm = world.config.ticks_per_minute
    doc = []
    for pid, plan in plans.items():
        if plan is None:
            doc.append({"drone": pid, "status": "no_path"})
        else:
            d = plan.to_dict()
            d["status"] = "ok"
            d["total_minutes"] = to_minutes(plan.total_time, tpm)
            doc.append(d)
    print(json.dumps(doc, indent=2))


def cmd_simulate(args):
    scen = load_scenario(args.scenario)
    world = scen.world(_planner_config(scen, args))
    delta = args.jitter if args.jitter is not None else scen.jitter
    jitter = JitterModel(delta, args.seed) if delta > 0 else None
    if args.online:
        trace = simulate_online(world, "pb", jitter)
    else:
        plans = plan_all_players(world, args.planner)
        trace = simulate(world, plans, jitter)
    tpm = world.config.ticks_per_minute
    out = Path(args.out or "trace.csv")
    trace.write(out, tpm)
    for pid in sorted(world.drones):
        if pid in trace.delivery_time:
            print(f"drone {pid}: delivered in {to_minutes(trace.delivery_time[pid], tpm):.2f} min")
        else:
            print(f"drone {pid}: stranded")
    print(f"wrote {out} ({len(trace.events)} events)")


def cmd_sweep(args):
    base = ScenarioConfig(area_side=args.area, max_edge_length=args.edge, player_count=args.players)
    pc = base.planner_config
    if args.tw is not None:
        pc = replace(pc, time_window=args.tw)
    if args.max_hops is not None:
        pc = replace(pc, max_hops=args.max_hops)
    base = replace(base, planner_config=pc)
    nodes = args.nodes or [50, 100, 150, 200, 250, 300]
    result = run_sweep(nodes, args.fraction, base, master_seed=args.seed)
    runs_path, agg_path = emit_metrics(result, args.out or "results")
    for row in result.aggregates():
        print(f"N={row['node_count']:4d} {row['planner']}: wall {row['wall_ms_mean']:.2f} ms, "
              f"delivery {row['delivery_mean']:.2f} min, excluded {row['excluded']}")
    print(f"dominance violations: {len(result.violations)}")
    print(f"wrote {runs_path} and {agg_path}")


def cmd_validate(args):
    scen = load_scenario(args.scenario)
    problems = validate_network(scen.network)
    import networkx as nx

    if scen.network.m and not nx.is_weakly_connected(scen.network.to_networkx().to_directed()):
        problems.append("network is not connected")
    if problems:
        for p in problems:
            print(p)
        return 1
    print(f"ok: {scen.network.m} stations, {len(scen.network.segments)} segments, "
          f"{len(scen.requests)} requests")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skyway", description="Drone delivery composition under pad contention")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("scenario", help="scenario JSON file")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--planner", choices=["pb", "ci"], default="pb")
        sp.add_argument("--tw", type=float, default=None, help="competitor time window, minutes")
        sp.add_argument("--jitter", type=float, default=None, help="arrival jitter half-width, minutes")
        sp.add_argument("--out", default=None)
        sp.add_argument("--max-hops", type=int, default=None)

    g = sub.add_parser("generate", help="random scenario from a config")
    common(g, scenario=False)
    g.add_argument("--nodes", type=_int_list, default=None)
    g.add_argument("--players", type=int, default=4)
    g.add_argument("--area", type=float, default=40.0, help="square side, km")
    g.add_argument("--edge", type=float, default=12.0, help="max segment length, km")
    g.set_defaults(func=cmd_generate)

    pl = sub.add_parser("plan", help="plan every drone in a scenario")
    common(pl)
    pl.set_defaults(func=cmd_plan)

    s = sub.add_parser("simulate", help="plan and execute, writing an event trace")
    common(s)
    s.add_argument("--online", action="store_true", help="greedy decisions at each stop during execution")
    s.set_defaults(func=cmd_simulate)

    sw = sub.add_parser("sweep", help="node-count sweep, writes CSV metrics")
    common(sw, scenario=False)
    sw.add_argument("--nodes", type=_int_list, default=None)
    sw.add_argument("--fraction", type=float, default=50.0, help="runs as %% of node count")
    sw.add_argument("--players", type=int, default=4)
    sw.add_argument("--area", type=float, default=40.0)
    sw.add_argument("--edge", type=float, default=12.0)
    sw.set_defaults(func=cmd_sweep)

    v = sub.add_parser("validate", help="lint a scenario file")
    v.add_argument("scenario")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        rc = args.func(args)
    except (ScenarioFormatError, OSError, ValueError, RuntimeError) as exc:
        print(f"skyway {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
