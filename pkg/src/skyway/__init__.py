"""Drone delivery service composition on skyway networks with recharging-pad contention."""

from .contention import (
    Reservation,
    StationSchedule,
    insert_fcfs,
    predicted_wait,
    rebuild_schedule,
    station_snapshot,
)
from .energy import EnergyModel, effective_range, energy_fraction, recharge_duration
from .model import (
    DJI_M200_V2,
    CompositionPlan,
    DeliveryRequest,
    DroneAgent,
    DroneSpec,
    PayoffBreakdown,
    PlanLeg,
    Segment,
    SkywayNetwork,
    Station,
    to_minutes,
    to_ticks,
    travel_time,
    validate_network,
)
from .planner import (
    BudgetExceededError,
    NoPathError,
    PlannerConfig,
    World,
    ncg_ci_plan,
    ncg_pb_plan,
    ncg_pb_step,
    plan_all_players,
)
from .sim import JitterModel, simulate, simulate_online

__version__ = "0.1.0"
