"""Averaged ideal boost converter between the panel and a fixed bus.

In continuous conduction the boost ratio is V_L / V_pv = 1 / (1 - D), so the
duty cycle alone fixes the panel voltage, V_pv = (1 - D) * V_L. The model is
quasi-static: no inductor or capacitor states, no switching ripple.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DutyOutOfRange, TargetAboveBus
from .pv_model import EnvSample, OperatingPoint, PanelParams, panel_current

D_MAX = 0.95


@dataclass(frozen=True)
class BusParams:
    """Battery/bus side of the converter.

    Attributes:
        v_l: Bus voltage held by the battery (V).
        d_max: Largest admissible duty; keeps clear of the 1/(1-D) pole.
        efficiency: Converter efficiency hook; 1.0 is the lossless default.
    """

    v_l: float = 60.0
    d_max: float = D_MAX
    efficiency: float = 1.0

    def __post_init__(self):
        if not self.v_l > 0:
            raise ValueError("bus voltage must be positive")
        if not 0 < self.d_max < 1:
            raise ValueError("d_max must lie in (0, 1)")
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must lie in (0, 1]")


def _check_duty(duty, bus):
    if not 0.0 <= duty <= bus.d_max:
        raise DutyOutOfRange(f"duty {duty} outside [0, {bus.d_max}]")


def clamp_duty(duty: float, bus: BusParams) -> float:
    return min(max(duty, 0.0), bus.d_max)


def panel_voltage_for_duty(duty: float, bus: BusParams) -> float:
    _check_duty(duty, bus)
    return (1.0 - duty) * bus.v_l


def duty_for_target_voltage(v_target: float, bus: BusParams) -> float:
    """Duty that holds the panel at ``v_target``, clamped to [0, d_max].

    Raises:
        TargetAboveBus: if ``v_target`` exceeds the bus voltage.
    """
    if v_target > bus.v_l:
        raise TargetAboveBus(f"target {v_target} V is above the {bus.v_l} V bus")
    if v_target <= 0:
        raise ValueError("target voltage must be positive")
    return clamp_duty(1.0 - v_target / bus.v_l, bus)


def solve_operating_point(duty: float, env: EnvSample, panel: PanelParams,
                          bus: BusParams) -> OperatingPoint:
    """Panel operating point for a given duty.

    Above the open-circuit voltage the panel cannot source current; the
    current is reported as zero instead of the negative diode solution.
    """
    v = panel_voltage_for_duty(duty, bus)
    i = max(panel_current(v, env, panel), 0.0)
    return OperatingPoint(v_pv=v, i_pv=i, p_pv=v * i, duty=duty)


def bus_power(op: OperatingPoint, bus: BusParams) -> float:
    """Power delivered to the bus."""
    return bus.efficiency * op.p_pv


def bus_current(op: OperatingPoint, bus: BusParams) -> float:
    return bus_power(op, bus) / bus.v_l
