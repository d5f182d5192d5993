"""Command-line front end.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime/model error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .controllers import CONTROLLER_NAMES, make_controller
from .environment import Scenario, load_scenario
from .errors import ConfigError, PVTrackError, ZeroIdeal
from .metrics import (DEFAULT_HARMONICS, SummaryMetrics, WaveformSamples, settling_steps,
                      steady_ripple, summarize, thd)
from .power_stage import BusParams, duty_for_target_voltage
from .pv_model import EnvSample, open_circuit_voltage, reference_panel, true_mpp
from .sim import save_csv, simulate

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3


class CLIError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


@dataclass
class RunReport:
    rows: List[Tuple[str, SummaryMetrics]] = field(default_factory=list)
    csv_paths: List[Path] = field(default_factory=list)
    scenario_hash: str = ""


def _load(path) -> Scenario:
    try:
        return load_scenario(path)
    except ConfigError as exc:
        raise CLIError(EXIT_USAGE, f"config error: {exc}") from None


def _scenario_for(base: Scenario, name: str) -> Scenario:
    # the file's controller parameters only apply to the controller it names
    params = base.controller.params if base.controller.name == name else {}
    scenario = base.with_controller(name, **params)
    try:
        make_controller(name, params, scenario.panel, scenario.bus)
    except ConfigError as exc:
        raise CLIError(EXIT_USAGE, f"config error: {exc}") from None
    return scenario


def _run(scenario: Scenario, out: Path) -> SummaryMetrics:
    try:
        trace = simulate(scenario)
    except PVTrackError as exc:
        raise CLIError(EXIT_RUNTIME, f"simulation error: {exc}") from None
    save_csv(trace, out)
    try:
        return summarize(trace)
    except ZeroIdeal:
        # dark intervals leave efficiency undefined; report the rest
        return SummaryMetrics(float("nan"),
                              [settling_steps(trace, t) for t in trace.disturbance_times],
                              steady_ripple(trace), float(np.mean(trace.column("p_pv"))))


def _format_table(rows) -> str:
    lines = [f"{'controller':<10} {'efficiency':>10} {'mean_W':>9} {'ripple_W':>9}  settling_steps"]
    for name, s in rows:
        settle = ",".join("-" if x is None else str(x) for x in s.settling_steps) or "n/a"
        lines.append(f"{name:<10} {s.tracking_efficiency:>10.6f} {s.mean_power:>9.3f} "
                     f"{s.steady_ripple:>9.4f}  {settle}")
    return "\n".join(lines)


def cmd_simulate(scenario_path, controller_name: Optional[str], out_path) -> RunReport:
    base = _load(scenario_path)
    name = controller_name or base.controller.name
    scenario = _scenario_for(base, name)
    out = Path(out_path)
    summary = _run(scenario, out)
    report = RunReport([(name, summary)], [out], scenario.digest())
    print(f"scenario {report.scenario_hash[:16]}  steps {scenario.n_steps}  trace {out}")
    print(_format_table(report.rows))
    return report


def cmd_compare(scenario_path, controller_list, out_dir) -> RunReport:
    if len(controller_list) < 2:
        raise CLIError(EXIT_USAGE, "compare needs at least two controllers")
    base = _load(scenario_path)
    scenarios = [_scenario_for(base, name) for name in controller_list]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = RunReport(scenario_hash=base.digest())
    seen = {}
    for name, sc in zip(controller_list, scenarios):
        seen[name] = seen.get(name, 0) + 1
        stem = name if seen[name] == 1 else f"{name}-{seen[name]}"
        path = out_dir / f"{stem}.csv"
        report.rows.append((name, _run(sc, path)))
        report.csv_paths.append(path)
    # stable sort keeps the requested order among ties
    ranked = sorted(report.rows, key=lambda r: -r[1].tracking_efficiency)
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "controller", "tracking_efficiency", "mean_power", "steady_ripple",
                    "settling_steps"])
        for rank, (name, s) in enumerate(ranked, 1):
            w.writerow([rank, name, f"{s.tracking_efficiency:.9g}", f"{s.mean_power:.9g}",
                        f"{s.steady_ripple:.9g}",
                        ";".join("" if x is None else str(x) for x in s.settling_steps)])
    print(f"scenario {report.scenario_hash[:16]}")
    print(_format_table(ranked))
    report.rows = ranked
    return report


def cmd_mpp(panel_path, g: float, t: float):
    if panel_path:
        sc = _load(panel_path)
        panel, bus = sc.panel, sc.bus
    else:
        panel, bus = reference_panel(), BusParams()
    try:
        env = EnvSample(g, t)
        op = true_mpp(env, panel)
        voc = open_circuit_voltage(env, panel)
        duty = duty_for_target_voltage(op.v_pv, bus)
    except (PVTrackError, ValueError) as exc:
        raise CLIError(EXIT_RUNTIME, f"model error: {type(exc).__name__}: {exc}") from None
    print(f"g_w_m2    {g:.6g}")
    print(f"t_c       {t:.6g}")
    print(f"v_mpp     {op.v_pv:.6f}")
    print(f"i_mpp     {op.i_pv:.6f}")
    print(f"p_mpp     {op.p_pv:.6f}")
    print(f"voc       {voc:.6f}")
    print(f"v_mpp/voc {op.v_pv / voc:.6f}")
    print(f"duty      {duty:.6f}")
    return op


def _read_samples(path):
    values = []
    try:
        with open(path, newline="") as fh:
            for n, row in enumerate(csv.reader(fh), 1):
                if not row or not row[0].strip():
                    continue
                try:
                    values.append(float(row[0]))
                except ValueError:
                    if n == 1:
                        continue  # header
                    raise CLIError(EXIT_USAGE, f"{path}:{n}: not a number: {row[0]!r}") from None
    except OSError as exc:
        raise CLIError(EXIT_USAGE, f"cannot read {path}: {exc.strerror}") from None
    return values


def cmd_thd(csv_path, sample_rate: float, fundamental: float,
            n_harmonics: int = DEFAULT_HARMONICS) -> float:
    samples = _read_samples(csv_path)
    try:
        value = thd(WaveformSamples(samples, sample_rate, fundamental), n_harmonics)
    except (PVTrackError, ValueError) as exc:
        raise CLIError(EXIT_RUNTIME, f"thd error: {type(exc).__name__}: {exc}") from None
    print(f"THD {value:.6f} %")
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pvtrack", description="PV MPPT simulator and analysis tools.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one controller on a scenario and write its trace")
    p.add_argument("--scenario", required=True, help="scenario file or builtin:<name>")
    p.add_argument("--controller", help=f"one of {', '.join(CONTROLLER_NAMES)}")
    p.add_argument("--out", default="trace.csv")

    p = sub.add_parser("compare", help="rank several controllers on one scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--controllers", required=True, help="comma-separated controller names")
    p.add_argument("--out", default="compare_out", help="output directory")

    p = sub.add_parser("mpp", help="print the true maximum power point")
    p.add_argument("--scenario", "--panel", dest="scenario",
                   help="file providing [panel] and [bus]; default reference panel, 60 V bus")
    p.add_argument("--g", type=float, default=1000.0)
    p.add_argument("--t", type=float, default=25.0)

    p = sub.add_parser("thd", help="total harmonic distortion of a one-column CSV")
    p.add_argument("csv_path")
    p.add_argument("--fs", type=float, required=True, help="sample rate (Hz)")
    p.add_argument("--f0", type=float, required=True, help="fundamental (Hz)")
    p.add_argument("--harmonics", type=int, default=DEFAULT_HARMONICS)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            cmd_simulate(args.scenario, args.controller, args.out)
        elif args.command == "compare":
            names = [n.strip() for n in args.controllers.split(",") if n.strip()]
            cmd_compare(args.scenario, names, args.out)
        elif args.command == "mpp":
            cmd_mpp(args.scenario, args.g, args.t)
        else:
            cmd_thd(args.csv_path, args.fs, args.f0, args.harmonics)
    except CLIError as exc:
        print(f"pvtrack: {exc}", file=sys.stderr)
        return exc.code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
