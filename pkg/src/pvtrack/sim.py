"""Fixed-step closed-loop simulation: environment -> panel -> converter -> controller."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import List, Optional

from .controllers import Action, Controller, Measurement, Probe, make_controller
from .environment import Scenario, sample
from .errors import PVTrackError, SimulationError
from .power_stage import BusParams, bus_power, solve_operating_point
from .pv_model import EnvSample, OperatingPoint, open_circuit_voltage, short_circuit_current, true_mpp

CSV_HEADER = ("time_s", "g_w_m2", "t_c", "duty", "v_pv", "i_pv", "p_pv", "p_ideal", "mode")


@dataclass(frozen=True)
class TraceRecord:
    time: float
    g: float
    t: float
    duty: float
    v_pv: float
    i_pv: float
    p_pv: float
    p_ideal: float
    mode: str = ""


@dataclass
class Trace:
    records: List[TraceRecord]
    dt: float
    scenario_hash: str = ""
    controller: str = ""
    disturbance_times: List[float] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, k):
        return self.records[k]

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.records]


class IdealPowerCache:
    """Memoized true-MPP power per distinct (g, t)."""

    def __init__(self, panel):
        self.panel = panel
        self._cache = {}

    def __call__(self, env: EnvSample) -> float:
        key = (env.g, env.t)
        if key not in self._cache:
            self._cache[key] = true_mpp(env, self.panel).p_pv if env.g > 0 else 0.0
        return self._cache[key]


def _disconnected_point(action: Action, env, scenario) -> OperatingPoint:
    # during an offline probe the load is cut, so nothing is harvested
    if env.g <= 0:
        return OperatingPoint(0.0, 0.0, 0.0, action.duty)
    if action.disconnect == "short":
        return OperatingPoint(0.0, short_circuit_current(env, scenario.panel), 0.0, action.duty)
    return OperatingPoint(open_circuit_voltage(env, scenario.panel), 0.0, 0.0, action.duty)


def simulate(scenario: Scenario, controller: Optional[Controller] = None,
             ideal: Optional[IdealPowerCache] = None) -> Trace:
    """Run one scenario and return its trace.

    Step k samples the profile at ``k*dt``, hands the controller the
    measurement taken at step k-1 (None at k=0, which runs the bootstrap
    duty) and solves the converter at the returned duty.

    Raises:
        SimulationError: wrapping any model or controller failure, with the
            step index attached.
    """
    if controller is None:
        spec = scenario.controller
        controller = make_controller(spec.name, spec.params, scenario.panel, scenario.bus)
    ideal = ideal or IdealPowerCache(scenario.panel)
    records = []
    prev_op = prev_env = None
    for k in range(scenario.n_steps):
        try:
            env = sample(scenario.profile, k * scenario.dt)
            m = None
            if prev_op is not None:
                m = Measurement(prev_op.v_pv, prev_op.i_pv, prev_op.p_pv, prev_env.t, prev_env.time)
            action = controller.step(m, Probe(env, scenario.panel, scenario.bus))
            if action.disconnect:
                op = _disconnected_point(action, env, scenario)
            else:
                op = solve_operating_point(action.duty, env, scenario.panel, scenario.bus)
            p_ideal = ideal(env)
        except (PVTrackError, ValueError) as exc:
            raise SimulationError(k, exc) from exc
        records.append(TraceRecord(env.time, env.g, env.t, op.duty, op.v_pv, op.i_pv,
                                   op.p_pv, p_ideal, action.mode))
        prev_op, prev_env = op, env
    return Trace(records, scenario.dt, scenario.digest(), controller.name,
                 scenario.profile.breakpoints)


def bus_energy(trace: Trace, bus: BusParams) -> float:
    """Energy (J) delivered to the bus side over the trace."""
    return sum(bus_power(OperatingPoint(r.v_pv, r.i_pv, r.p_pv, r.duty), bus)
               for r in trace) * trace.dt


def panel_energy(trace: Trace) -> float:
    return sum(r.p_pv for r in trace) * trace.dt


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def write_csv(trace: Trace, fh) -> None:
    """Write ``trace`` as CSV to an open text file."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in trace:
        w.writerow([_fmt(r.time), _fmt(r.g), _fmt(r.t), _fmt(r.duty), _fmt(r.v_pv),
                    _fmt(r.i_pv), _fmt(r.p_pv), _fmt(r.p_ideal), r.mode])


def trace_to_csv(trace: Trace) -> str:
    buf = io.StringIO()
    write_csv(trace, buf)
    return buf.getvalue()


def save_csv(trace: Trace, path) -> None:
    with open(path, "w", newline="") as fh:
        write_csv(trace, fh)


def read_csv(path, dt: float) -> Trace:
    """Load a trace written by :func:`save_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    recs = [TraceRecord(float(r["time_s"]), float(r["g_w_m2"]), float(r["t_c"]),
                        float(r["duty"]), float(r["v_pv"]), float(r["i_pv"]),
                        float(r["p_pv"]), float(r["p_ideal"]), r["mode"]) for r in rows]
    return Trace(recs, dt)
