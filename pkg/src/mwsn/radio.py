"""First-order radio energy model, unit-disk links and localization surcharge."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .model import distance


@dataclass(frozen=True)
class RadioParams:
    range_m: float = 250.0 * math.sqrt(2.0)
    e_elec: float = 50e-9  # J/bit
    e_amp: float = 0.0013e-12  # J/bit/m^exponent
    path_loss_exponent: int = 2

    def __post_init__(self):
        if self.range_m <= 0:
            raise ValueError("range_m must be positive")
        if self.e_elec < 0 or self.e_amp < 0:
            raise ValueError("radio energy coefficients must be nonnegative")
        if self.path_loss_exponent not in (2, 4):
            raise ValueError("path_loss_exponent must be 2 or 4")


def in_range(a, b, radio: RadioParams) -> bool:
    return distance(a, b) <= radio.range_m


def tx_energy(k: float, d: float, radio: RadioParams) -> float:
    """Joules to transmit ``k`` bits over ``d`` meters."""
    if k < 0 or d < 0:
        raise ValueError("bits and distance must be nonnegative")
    return radio.e_elec * k + radio.e_amp * k * d**radio.path_loss_exponent


def rx_energy(k: float, radio: RadioParams) -> float:
    if k < 0:
        raise ValueError("bits must be nonnegative")
    return radio.e_elec * k


class Delivery(enum.Enum):
    DELIVERED = "Delivered"
    LOST_OUT_OF_RANGE = "LostOutOfRange"
    LOST_DEAD_SENDER = "LostDeadSender"
    LOST_DEAD_RECEIVER = "LostDeadReceiver"


@dataclass(frozen=True)
class DeliveryOutcome:
    status: Delivery
    receivers: tuple = ()
    sink_heard: bool = False

    @property
    def delivered(self) -> bool:
        return self.status is Delivery.DELIVERED


LOST_DEAD_SENDER = DeliveryOutcome(Delivery.LOST_DEAD_SENDER)
LOST_OUT_OF_RANGE = DeliveryOutcome(Delivery.LOST_OUT_OF_RANGE)
LOST_DEAD_RECEIVER = DeliveryOutcome(Delivery.LOST_DEAD_RECEIVER)


@dataclass
class LocalizationState:
    last_fix_position: tuple
    fix_cost_j: float = 2e-4
    fix_displacement_m: float = 10.0


def maybe_position_fix(position, loc: LocalizationState) -> tuple[LocalizationState, float]:
    """Charge one fix when the node has drifted far enough from its last fix."""
    if distance(position, loc.last_fix_position) >= loc.fix_displacement_m:
        return LocalizationState(tuple(position), loc.fix_cost_j, loc.fix_displacement_m), loc.fix_cost_j
    return loc, 0.0
