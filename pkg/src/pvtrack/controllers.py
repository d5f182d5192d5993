"""MPPT controllers.

Every tracker is written as a step function ``f(state, measurement, ...)``
returning the next duty and updating ``state`` in place. The classes at the
bottom wrap those functions behind the common ``step(m, probe)`` call used by
the simulator.

Duty convention: raising the duty lowers the panel voltage, V = (1 - D) V_L.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .errors import ConfigError, InvalidK, NoLight
from .power_stage import (D_MAX, BusParams, clamp_duty, duty_for_target_voltage,
                          panel_voltage_for_duty)
from .pv_model import (T_REF, EnvSample, PanelParams, open_circuit_voltage,
                       panel_current, short_circuit_current)

BOOTSTRAP_DUTY = 0.5

CALC = "CALC"
FINE = "FINE"
PROBE = "PROBE"


@dataclass(frozen=True)
class Measurement:
    """Sensor readings the controller sees, one control period late."""

    v_pv: float
    i_pv: float
    p_pv: float
    t: float
    time: float = 0.0


@dataclass
class ControllerState:
    """Mutable memory of a single controller instance."""

    last_duty: float = BOOTSTRAP_DUTY
    last_power: float = 0.0
    last_temp: Optional[float] = None
    perturb_dir: int = 1
    mode: Optional[str] = None
    last_v: Optional[float] = None
    last_i: Optional[float] = None
    last_probe_time: Optional[float] = None


@dataclass(frozen=True)
class HybridConfig:
    """Primary values for the two-loop tracker.

    Attributes:
        k: Fractional open-circuit-voltage constant.
        voc_n: Rated open-circuit voltage at 25 degC (V).
        kv: Open-circuit voltage temperature coefficient (V/degC).
        t_threshold: Temperature change (degC) that triggers a recalculation.
        fine_step: Duty increment of the fine-tuning loop.
    """

    k: float
    voc_n: float
    kv: float
    t_threshold: float = 1.0
    fine_step: float = 0.005

    def __post_init__(self):
        if not 0 < self.k < 1:
            raise InvalidK(f"k={self.k} must lie in (0, 1)")
        if not 0.7 <= self.k <= 0.8:
            warnings.warn(f"fractional Voc constant k={self.k} is outside the usual [0.7, 0.8]",
                          stacklevel=2)
        if not self.t_threshold > 0:
            raise ValueError("t_threshold must be positive")
        if not 0 < self.fine_step <= 0.1:
            raise ValueError("fine_step must lie in (0, 0.1]")

    @classmethod
    def for_panel(cls, panel: PanelParams, **kw) -> "HybridConfig":
        kw.setdefault("k", DEFAULT_K)
        return cls(voc_n=panel.voc_n, kv=panel.kv, **kw)


# the reference panel's STC ratio V_mpp / V_oc is about 0.742
DEFAULT_K = 0.74
DEFAULT_KK = 0.85


def estimate_vmpp_fractional_voc(voc: float, k: float) -> float:
    if not 0 < k < 1:
        raise InvalidK(f"k={k} must lie in (0, 1)")
    return k * voc


def estimate_impp_fractional_isc(isc: float, kk: float) -> float:
    if not 0 < kk < 1:
        raise InvalidK(f"K={kk} must lie in (0, 1)")
    return kk * isc


def temperature_corrected_voc(t: float, cfg: HybridConfig) -> float:
    """Open-circuit voltage predicted linearly from the rated value."""
    return cfg.voc_n + cfg.kv * (t - T_REF)


def po_step(state: ControllerState, m: Measurement, step: float,
            d_max: float = D_MAX) -> float:
    """Perturb and observe. A power tie keeps the current direction."""
    if m.p_pv < state.last_power:
        state.perturb_dir = -state.perturb_dir
    duty = min(max(state.last_duty + state.perturb_dir * step, 0.0), d_max)
    state.last_power = m.p_pv
    state.last_duty = duty
    return duty


def inc_cond_step(state: ControllerState, m: Measurement, step: float, eps: float,
                  d_max: float = D_MAX) -> float:
    """Incremental conductance on the sign of dI/dV + I/V.

    With no earlier sample the controller perturbs once in ``perturb_dir``
    to obtain a first difference.
    """
    if state.last_v is None:
        move = state.perturb_dir
    else:
        dv = m.v_pv - state.last_v
        di = m.i_pv - state.last_i
        if dv == 0:
            # duty was held; only the environment moved the current
            move = 0 if di == 0 else (-1 if di > 0 else 1)
        else:
            slope = di / dv
            g = m.i_pv / m.v_pv if m.v_pv != 0 else math.inf
            if abs(slope + g) <= eps:
                move = 0
            elif slope > -g:
                move = -1  # left of the MPP: raise the voltage
            else:
                move = 1
    duty = min(max(state.last_duty + move * step, 0.0), d_max)
    state.last_v, state.last_i = m.v_pv, m.i_pv
    state.last_power = m.p_pv
    state.last_duty = duty
    return duty


def hybrid_step(state: ControllerState, m: Measurement, cfg: HybridConfig,
                bus: BusParams) -> float:
    """Two-loop tracker: point calculation on temperature moves, P&O otherwise.

    The calculation loop rebuilds Voc from the measured temperature, applies
    the fractional-Voc estimate and converts it to a duty. It runs on the
    first call and whenever the temperature has drifted more than
    ``cfg.t_threshold`` from the value seen at the last calculation.
    """
    if state.last_temp is None or abs(m.t - state.last_temp) > cfg.t_threshold:
        v_est = estimate_vmpp_fractional_voc(temperature_corrected_voc(m.t, cfg), cfg.k)
        duty = duty_for_target_voltage(v_est, bus)
        state.mode = CALC
        state.last_temp = m.t
        state.last_power = m.p_pv
        state.last_duty = duty
        return duty
    state.mode = FINE
    return po_step(state, m, cfg.fine_step, bus.d_max)


class Probe:
    """Measurement access available to offline controllers during a probe.

    Wraps the panel model at the current environment so a controller can read
    Voc or Isc as a disconnected or shorted panel would report them.
    """

    def __init__(self, env: EnvSample, panel: PanelParams, bus: BusParams):
        self.env = env
        self.panel = panel
        self.bus = bus

    def voc(self) -> float:
        return open_circuit_voltage(self.env, self.panel)

    def isc(self) -> float:
        return short_circuit_current(self.env, self.panel)

    def current_at_duty(self, duty: float) -> float:
        v = panel_voltage_for_duty(duty, self.bus)
        return max(panel_current(v, self.env, self.panel), 0.0)

    def duty_for_current(self, target: float, tol: float = 1e-10) -> float:
        """Bisection on the duty -> current curve, increasing in duty."""
        lo, hi = 0.0, self.bus.d_max
        if self.current_at_duty(hi) <= target:
            return hi
        if self.current_at_duty(lo) >= target:
            return lo
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if self.current_at_duty(mid) < target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


@dataclass(frozen=True)
class FractionalConfig:
    k: float
    probe_interval: float = 5.0

    def __post_init__(self):
        if not 0 < self.k < 1:
            raise InvalidK(f"k={self.k} must lie in (0, 1)")
        if not self.probe_interval > 0:
            raise ValueError("probe_interval must be positive")


def _probe_due(state, now, interval):
    # tolerance absorbs k*dt rounding in the simulation clock
    return state.last_probe_time is None or now - state.last_probe_time >= interval - 1e-9


def fractional_voc_controller_step(state: ControllerState, m: Optional[Measurement],
                                   cfg: FractionalConfig, probe: Probe) -> float:
    """Offline fractional-Voc tracker; sets ``state.mode`` to PROBE on probe steps.

    Raises:
        NoLight: if a probe falls on a dark step.
    """
    if _probe_due(state, probe.env.time, cfg.probe_interval):
        v_est = estimate_vmpp_fractional_voc(probe.voc(), cfg.k)
        state.last_duty = duty_for_target_voltage(v_est, probe.bus)
        state.last_probe_time = probe.env.time
        state.mode = PROBE
    else:
        state.mode = None
    return state.last_duty


def fractional_isc_controller_step(state: ControllerState, m: Optional[Measurement],
                                   cfg: FractionalConfig, probe: Probe) -> float:
    """Offline fractional-Isc tracker; the duty comes from a current bisection."""
    if _probe_due(state, probe.env.time, cfg.probe_interval):
        if probe.env.g <= 0:
            raise NoLight("short-circuit probe on a dark panel")
        target = estimate_impp_fractional_isc(probe.isc(), cfg.k)
        state.last_duty = clamp_duty(probe.duty_for_current(target), probe.bus)
        state.last_probe_time = probe.env.time
        state.mode = PROBE
    else:
        state.mode = None
    return state.last_duty


class Action(NamedTuple):
    """Controller output for one step.

    ``disconnect`` is "open" or "short" while an offline probe cuts the load.
    """

    duty: float
    mode: str = ""
    disconnect: Optional[str] = None


class Controller:
    """Common interface driven by the simulator.

    ``step`` receives the previous operating point's measurement (None on the
    very first step) and a probe on the current environment.
    """

    name = "controller"

    def __init__(self, bus: BusParams):
        self.bus = bus
        self.state = ControllerState()

    def step(self, m: Optional[Measurement], probe: Probe) -> Action:
        if m is None:
            return Action(self.state.last_duty)
        return Action(self._update(m, probe))

    def _update(self, m, probe):
        raise NotImplementedError


class FixedDuty(Controller):
    name = "fixed"

    def __init__(self, bus: BusParams, duty: float):
        super().__init__(bus)
        self.state.last_duty = duty

    def step(self, m, probe):
        return Action(self.state.last_duty)


class PerturbObserve(Controller):
    name = "po"

    def __init__(self, bus: BusParams, step: float = 0.01):
        super().__init__(bus)
        if not step > 0:
            raise ValueError("step must be positive")
        self.step_size = step

    def _update(self, m, probe):
        return po_step(self.state, m, self.step_size, self.bus.d_max)


class IncrementalConductance(Controller):
    name = "inccond"

    def __init__(self, bus: BusParams, step: float = 0.01, eps: float = 0.01):
        super().__init__(bus)
        if not step > 0 or eps < 0:
            raise ValueError("step must be positive and eps non-negative")
        self.step_size = step
        self.eps = eps

    def _update(self, m, probe):
        return inc_cond_step(self.state, m, self.step_size, self.eps, self.bus.d_max)


class Hybrid(Controller):
    name = "hybrid"

    def __init__(self, bus: BusParams, cfg: HybridConfig):
        super().__init__(bus)
        self.cfg = cfg

    def step(self, m, probe):
        if m is None:
            return Action(self.state.last_duty)
        duty = hybrid_step(self.state, m, self.cfg, self.bus)
        return Action(duty, self.state.mode)


class FractionalVoc(Controller):
    name = "frac_voc"
    probe_kind = "open"
    _step_fn = staticmethod(fractional_voc_controller_step)

    def __init__(self, bus: BusParams, cfg: FractionalConfig):
        super().__init__(bus)
        self.cfg = cfg

    def step(self, m, probe):
        # the first step is the bootstrap for every controller
        if m is None:
            return Action(self.state.last_duty)
        duty = self._step_fn(self.state, m, self.cfg, probe)
        if self.state.mode == PROBE:
            return Action(duty, PROBE, self.probe_kind)
        return Action(duty)


class FractionalIsc(FractionalVoc):
    name = "frac_isc"
    probe_kind = "short"
    _step_fn = staticmethod(fractional_isc_controller_step)


CONTROLLER_NAMES = ("hybrid", "po", "inccond", "frac_voc", "frac_isc")

_ALLOWED_KEYS = {
    "hybrid": {"k", "t_threshold", "fine_step", "voc_n", "kv"},
    "po": {"step"},
    "inccond": {"step", "eps"},
    "frac_voc": {"k", "probe_interval"},
    "frac_isc": {"k", "probe_interval"},
}


def make_controller(name: str, params: dict, panel: PanelParams, bus: BusParams) -> Controller:
    """Build a controller from its name and numeric keyword parameters.

    Raises:
        ConfigError: on an unknown name or a key the controller does not take.
    """
    if name not in _ALLOWED_KEYS:
        raise ConfigError(f"unknown controller {name!r}; valid names: {', '.join(CONTROLLER_NAMES)}",
                          key="name")
    for key in params:
        if key not in _ALLOWED_KEYS[name]:
            raise ConfigError(f"controller {name!r} does not accept this key", key=key)
    params = dict(params)
    try:
        if name == "hybrid":
            return Hybrid(bus, HybridConfig(k=params.pop("k", DEFAULT_K),
                                            voc_n=params.pop("voc_n", panel.voc_n),
                                            kv=params.pop("kv", panel.kv), **params))
        if name == "po":
            return PerturbObserve(bus, **params)
        if name == "inccond":
            return IncrementalConductance(bus, **params)
        if name == "frac_voc":
            return FractionalVoc(bus, FractionalConfig(k=params.pop("k", DEFAULT_K), **params))
        return FractionalIsc(bus, FractionalConfig(k=params.pop("k", DEFAULT_KK), **params))
    except (ValueError, InvalidK) as exc:
        raise ConfigError(f"bad parameters for {name!r}: {exc}") from None
