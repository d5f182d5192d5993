"""Photovoltaic MPPT simulation: panel model, boost stage, trackers and metrics."""

from .controllers import (ControllerState, HybridConfig, Measurement, hybrid_step,
                          inc_cond_step, make_controller, po_step)
from .environment import Profile, Scenario, canonical_scenario, load_scenario, sample
from .metrics import WaveformSamples, settling_steps, summarize, thd, tracking_efficiency
from .power_stage import (BusParams, duty_for_target_voltage, panel_voltage_for_duty,
                          solve_operating_point)
from .pv_model import (STC, EnvSample, OperatingPoint, PanelParams, open_circuit_voltage,
                       panel_current, photocurrent, reference_panel, true_mpp)
from .sim import Trace, TraceRecord, simulate

__version__ = "0.1.0"
