"""Battery, range and recharge model.

Battery charge is a fraction in [0, 1]; a full battery covers exactly the
effective range at the carried payload.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import TICKS_PER_MINUTE


class InfeasibleLegError(ValueError):
    """A leg is longer than what one charge can cover."""


@dataclass(frozen=True)
class EnergyModel:
    base_range: float
    payload_derating: float = 0.25
    recharge_mode: str = "full-fixed"
    full_recharge_duration: float = 60.0

    def __post_init__(self):
        if self.base_range <= 0:
            raise ValueError("base_range must be > 0")
        if not 0.0 <= self.payload_derating < 1.0:
            raise ValueError("payload_derating must lie in [0, 1)")
        if self.recharge_mode not in ("full-fixed", "proportional"):
            raise ValueError(f"unknown recharge_mode {self.recharge_mode!r}")
        if self.full_recharge_duration <= 0:
            raise ValueError("full_recharge_duration must be > 0")


def effective_range(model: EnergyModel, payload: float, max_payload: float) -> float:
    """Range in km on a full charge, derated linearly with payload."""
    if not 0.0 <= payload <= max_payload:
        raise ValueError(f"payload {payload} outside [0, {max_payload}]")
    return model.base_range * (1.0 - model.payload_derating * payload / max_payload)


def energy_fraction(model: EnergyModel, distance: float, payload: float, max_payload: float) -> float:
    if distance < 0:
        raise ValueError("distance must be >= 0")
    reach = effective_range(model, payload, max_payload)
    if distance > reach:
        raise InfeasibleLegError(f"{distance:.3f} km exceeds effective range {reach:.3f} km")
    return distance / reach


def recharge_duration(model: EnergyModel, battery_deficit: float,
                      ticks_per_minute: int = TICKS_PER_MINUTE) -> int:
    """Recharge time in ticks to bring the battery back to full."""
    if not 0.0 <= battery_deficit <= 1.0:
        raise ValueError(f"battery deficit {battery_deficit} outside [0, 1]")
    if model.recharge_mode == "full-fixed":
        minutes = model.full_recharge_duration
    else:
        minutes = battery_deficit * model.full_recharge_duration
    return int(round(minutes * ticks_per_minute))
