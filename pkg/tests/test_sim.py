import pytest

from conftest import make_net, make_world
from oracles import brute_force_waits
from skyway.model import DeliveryRequest
from skyway.planner import ncg_pb_plan, plan_all_players
from skyway.sim import KIND_PRIORITY, Event, JitterModel, simulate, simulate_online


def crossing_net():
    """Two routes that share station X=1: 0 -> X -> 2 and 3 -> X -> 4."""
    positions = {0: (-13.5, 0.0), 1: (0.0, 0.0), 2: (20.0, 0.0), 3: (0.0, -12.15), 4: (0.0, 20.0)}
    return make_net(positions, [(0, 1), (1, 2), (3, 1), (1, 4)])


def test_single_drone_realizes_its_plan():
    net = make_net({0: (0, 0), 1: (20, 0), 2: (40, 0)}, [(0, 1), (1, 2)])
    world = make_world(net, [DeliveryRequest(0, 0, 2, 0.0, 500)])
    plan = ncg_pb_plan(world, 0)
    trace = simulate(world, {0: plan})
    assert trace.delivery_time[0] == plan.total_time == 8962
    assert trace.energy_violations == [] and not trace.stranded
    assert [e.kind for e in trace.events] == [
        "depart", "arrive", "recharge_start", "recharge_end", "depart", "arrive", "deliver"]


@pytest.mark.parametrize("planner", ["pb", "ci"])
def test_plans_realize_without_bumps(fork_net, request_sd, planner):
    reqs = [DeliveryRequest(1, 4, 3, 0.0), DeliveryRequest(2, 4, 3, 0.0), request_sd]
    world = make_world(fork_net, reqs)
    plans = plan_all_players(world, planner)
    trace = simulate(world, plans)
    assert {pid: p.total_time for pid, p in plans.items()} == trace.delivery_time
    assert trace.delivery_time[5] == 9203


def test_later_planner_can_bump_an_earlier_plan():
    # drone 0 plans first and expects X to itself at t=1000; drone 1 plans
    # second, lands at 900 and takes the pad, so drone 0 waits at run time.
    reqs = [DeliveryRequest(0, 0, 2, 0.0, 0), DeliveryRequest(1, 3, 4, 0.0, 0)]
    world = make_world(crossing_net(), reqs)
    plans = plan_all_players(world, "ci")
    assert plans[0].legs[0].arrival_time == 1000 and plans[0].legs[0].wait_time == 0
    assert plans[1].legs[0].arrival_time == 900 and plans[1].legs[0].wait_time == 0
    trace = simulate(world, plans)
    assert trace.delivery_time[1] == plans[1].total_time
    assert trace.legs[0][0].wait_time == 5900
    assert trace.delivery_time[0] == plans[0].total_time + 5900


def test_jitter_can_swap_order_and_waits_follow_fcfs():
    reqs = [DeliveryRequest(0, 0, 2, 0.0, 0), DeliveryRequest(1, 3, 4, 0.0, 0)]
    world = make_world(crossing_net(), reqs)
    plans = plan_all_players(world, "pb")
    firsts = set()
    for seed in range(40):
        trace = simulate(world, plans, JitterModel(delta=5, seed=seed))
        sched = trace.schedules[1]
        firsts.add(sched.reservations[0].drone)
        arrivals = [(r.drone, r.arrival, r.end - r.start) for r in sched.reservations]
        assert sched.waits() == brute_force_waits(arrivals, 1, jump=True)
    assert firsts == {0, 1}


def test_jitter_offsets_bounded_and_deterministic():
    j = JitterModel(delta=5, seed=3)
    offsets = [j.offset(d, k, 100) for d in range(5) for k in range(5)]
    assert all(-500 <= o <= 500 for o in offsets)
    assert offsets == [JitterModel(delta=5, seed=3).offset(d, k, 100) for d in range(5) for k in range(5)]
    assert JitterModel(delta=0).offset(1, 1, 100) == 0


def test_online_single_player_matches_offline():
    net = make_net({0: (0, 0), 1: (20, 0), 2: (40, 0), 3: (20, 15)}, [(0, 1), (1, 2), (0, 3), (3, 2)])
    world = make_world(net, [DeliveryRequest(0, 0, 2, 0.0, 0)])
    online = simulate_online(world)
    offline = ncg_pb_plan(make_world(net, [DeliveryRequest(0, 0, 2, 0.0, 0)]), 0)
    assert online.delivery_time[0] == offline.total_time
    assert [leg.target for leg in online.legs[0]] == list(offline.stations[1:])


def test_online_routes_around_live_queue(fork_net):
    reqs = [DeliveryRequest(0, 0, 3, 0.0, 0), DeliveryRequest(1, 0, 3, 0.0, 1000)]
    trace = simulate_online(make_world(fork_net, reqs))
    assert [leg.target for leg in trace.legs[0]] == [1, 3]
    assert [leg.target for leg in trace.legs[1]] == [2, 3]
    assert trace.delivery_time == {0: 8963, 1: 9203}


def test_online_strands_drone_with_no_way_forward():
    net = make_net({0: (0, 0), 1: (10, 0), 2: (100, 0), 3: (110, 0)}, [(0, 1), (2, 3)])
    world = make_world(net, [DeliveryRequest(0, 0, 3, 0.0), DeliveryRequest(1, 0, 1, 0.0)])
    trace = simulate_online(world)
    assert trace.stranded == {0}
    assert 0 not in trace.delivery_time and trace.delivery_time[1] == 741


def test_online_rejects_exhaustive(fork_net, request_sd):
    with pytest.raises(ValueError):
        simulate_online(make_world(fork_net, [request_sd]), "ci")


def test_missing_plan_is_stranded(fork_net, request_sd):
    trace = simulate(make_world(fork_net, [request_sd]), {5: None})
    assert trace.stranded == {5} and trace.events == []


def test_trace_csv(tmp_path, fork_net, request_sd):
    world = make_world(fork_net, [request_sd])
    trace = simulate(world, plan_all_players(world, "pb"))
    path = tmp_path / "trace.csv"
    trace.write(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "time,kind,drone,location"
    assert lines[1] == "0.00,depart,5,0"
    assert lines[-1] == "89.63,deliver,5,3"


def test_events_sorted_by_time_then_kind():
    reqs = [DeliveryRequest(0, 0, 2, 0.0, 0), DeliveryRequest(1, 3, 4, 0.0, 0)]
    world = make_world(crossing_net(), reqs)
    trace = simulate(world, plan_all_players(world, "pb"), JitterModel(5, 1))
    keys = [e.sort_key() for e in trace.events]
    assert keys == sorted(keys)
    assert Event(5, "arrive", 9, 0).sort_key() < Event(5, "depart", 0, 0).sort_key()
    assert KIND_PRIORITY["arrive"] < KIND_PRIORITY["recharge_start"]


def test_seeded_runs_are_identical():
    reqs = [DeliveryRequest(0, 0, 2, 0.0, 0), DeliveryRequest(1, 3, 4, 0.0, 0)]
    world = make_world(crossing_net(), reqs)
    a = simulate_online(world, jitter=JitterModel(10, 7)).to_lines()
    b = simulate_online(world, jitter=JitterModel(10, 7)).to_lines()
    c = simulate_online(world, jitter=JitterModel(10, 8)).to_lines()
    assert a == b and a != c
