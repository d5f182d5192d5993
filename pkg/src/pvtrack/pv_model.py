"""Single-diode photovoltaic panel model.

The panel is the classical five-parameter equivalent circuit: a photocurrent
source in parallel with a diode and a shunt resistance, feeding the terminals
through a series resistance. Terminal current is the root of

    I = I_ph - I_0 * (exp((V + I*R_s) / (N_s*n*V_t)) - 1) - (V + I*R_s) / R_sh

which is solved with a monotone Newton iteration (bisection as a fallback).

The saturation current ``I_0`` is pinned at each temperature so that the
open-circuit voltage at 1000 W/m^2 is exactly ``voc_n + kv*(t - t_ref)``.
At STC this reduces to ``panel_current(voc_n) == 0``.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np
from scipy.constants import Boltzmann, elementary_charge

from .errors import ConfigError, NoLight, NonConvergence

G_REF = 1000.0
T_REF = 25.0
KELVIN = 273.15

NEWTON_TOL = 1e-9
NEWTON_MAXITER = 100
SCAN_POINTS = 1000

_PANEL_KEYS = ("voc_n", "isc_n", "kv", "ki", "n_series", "ideality", "r_s", "r_sh")


@dataclass(frozen=True)
class PanelParams:
    """Datasheet and model constants of one PV panel.

    Attributes:
        voc_n: Open-circuit voltage at STC (V).
        isc_n: Short-circuit current at STC (A).
        kv: Open-circuit voltage temperature coefficient (V/degC).
        ki: Short-circuit current temperature coefficient (A/degC).
        n_series: Number of series-connected cells.
        ideality: Diode ideality factor, in [1, 2].
        r_s: Series resistance (ohm).
        r_sh: Shunt resistance (ohm).
    """

    voc_n: float
    isc_n: float
    kv: float
    ki: float
    n_series: int = 60
    ideality: float = 1.3
    r_s: float = 0.2
    r_sh: float = 300.0
    g_ref: float = field(default=G_REF, init=False)
    t_ref: float = field(default=T_REF, init=False)

    def __post_init__(self):
        if not self.voc_n > 0:
            raise ValueError("voc_n must be positive")
        if not self.isc_n > 0:
            raise ValueError("isc_n must be positive")
        if self.n_series < 1:
            raise ValueError("n_series must be >= 1")
        if not 1.0 <= self.ideality <= 2.0:
            raise ValueError("ideality must lie in [1, 2]")
        if self.r_s < 0:
            raise ValueError("r_s must be >= 0")
        if not self.r_sh > 0:
            raise ValueError("r_sh must be positive")


@dataclass(frozen=True)
class EnvSample:
    """Irradiance (W/m^2) and cell temperature (degC) at a point in time."""

    g: float
    t: float
    time: float = 0.0

    def __post_init__(self):
        if not self.g >= 0:
            raise ValueError(f"irradiance must be >= 0, got {self.g}")
        if self.time < 0:
            raise ValueError(f"time must be >= 0, got {self.time}")


STC = EnvSample(g=G_REF, t=T_REF)


@dataclass(frozen=True)
class OperatingPoint:
    """Electrical state of the panel.

    ``duty`` is None for points computed from the panel alone (no converter).
    """

    v_pv: float
    i_pv: float
    p_pv: float
    duty: Optional[float] = None


def thermal_voltage(t: float) -> float:
    """Diode thermal voltage kT/q (V) at cell temperature ``t`` in degC."""
    return Boltzmann * (t + KELVIN) / elementary_charge


def photocurrent(env: EnvSample, p: PanelParams) -> float:
    """Light-generated current, linear in irradiance, clamped at zero."""
    isc_t = max(p.isc_n + p.ki * (env.t - p.t_ref), 0.0)
    return isc_t * env.g / p.g_ref


def _diode_constants(env: EnvSample, p: PanelParams):
    """Return (I_ph, I_0, a) where ``a`` is the modified ideality voltage."""
    a = p.n_series * p.ideality * thermal_voltage(env.t)
    dt = env.t - p.t_ref
    voc_t = p.voc_n + p.kv * dt
    if voc_t <= 0:
        raise ValueError(f"temperature {env.t} degC drives the rated Voc non-positive")
    iph_ref = max(p.isc_n + p.ki * dt, 0.0)
    # keep I_0 strictly positive so the diode term never vanishes
    i0 = max(iph_ref - voc_t / p.r_sh, 1e-3 * iph_ref, 1e-30) / math.expm1(voc_t / a)
    return photocurrent(env, p), i0, a


def _residual(i, v, iph, i0, a, p):
    vd = v + i * p.r_s
    return iph - i0 * np.expm1(vd / a) - vd / p.r_sh - i


def panel_current(v, env: EnvSample, p: PanelParams):
    """Terminal current of the panel at voltage ``v``.

    Accepts a scalar or an array of voltages. The iteration starts at I_ph,
    which lies right of the root of a concave decreasing residual, so Newton
    steps approach the root monotonically. Points that fail to converge are
    retried by bisection.

    Raises:
        NonConvergence: if neither Newton nor bisection reaches 1e-9 A.
    """
    iph, i0, a = _diode_constants(env, p)
    if np.ndim(v) == 0:
        i = _newton_scalar(float(v), iph, i0, a, p)
        if i is not None:
            return i
    v_arr = np.asarray(v, dtype=float)
    i = np.full(v_arr.shape, iph, dtype=float)
    with np.errstate(over="ignore"):
        for _ in range(NEWTON_MAXITER):
            e = np.exp((v_arr + i * p.r_s) / a)
            f = iph - i0 * (e - 1.0) - (v_arr + i * p.r_s) / p.r_sh - i
            if np.all(np.abs(f) < NEWTON_TOL):
                break
            df = -i0 * p.r_s / a * e - p.r_s / p.r_sh - 1.0
            i = i - f / df
        f = _residual(i, v_arr, iph, i0, a, p)
    bad = ~(np.abs(f) < NEWTON_TOL)
    if np.any(bad):
        i[bad] = _bisect(v_arr[bad], iph, i0, a, p)
    return float(i) if np.ndim(v) == 0 else i


def _newton_scalar(v, iph, i0, a, p):
    i = iph
    for _ in range(NEWTON_MAXITER):
        try:
            e = math.exp((v + i * p.r_s) / a)
        except OverflowError:
            return None
        f = iph - i0 * (e - 1.0) - (v + i * p.r_s) / p.r_sh - i
        if abs(f) < NEWTON_TOL:
            return i
        i -= f / (-i0 * p.r_s / a * e - p.r_s / p.r_sh - 1.0)
    return None


def _bisect(v, iph, i0, a, p):
    lo = np.full(v.shape, -p.isc_n)
    hi = np.full(v.shape, 2.0 * p.isc_n)
    with np.errstate(over="ignore"):
        # the residual is decreasing in I; widen the lower end until it brackets
        for _ in range(60):
            need = _residual(lo, v, iph, i0, a, p) < 0
            if not np.any(need):
                break
            lo[need] *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            f = _residual(mid, v, iph, i0, a, p)
            if np.all(np.abs(f) < NEWTON_TOL):
                return mid
            pos = f > 0
            lo = np.where(pos, mid, lo)
            hi = np.where(pos, hi, mid)
    # floating-point resolution may stop short of 1e-9 A only for absurd parameters
    raise NonConvergence(f"diode equation unresolved for v={v.tolist()}")


def open_circuit_voltage(env: EnvSample, p: PanelParams) -> float:
    """Voltage at which the terminal current is zero.

    Raises:
        NoLight: when ``env.g == 0``.
    """
    if env.g <= 0:
        raise NoLight("open-circuit voltage is undefined without irradiance")
    iph, i0, a = _diode_constants(env, p)
    # with I = 0 the equation is explicit in V: iph - i0*expm1(V/a) - V/r_sh
    lo, hi = 0.0, a * math.log1p(iph / i0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if iph - i0 * math.expm1(mid / a) - mid / p.r_sh > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    return 0.5 * (lo + hi)


def short_circuit_current(env: EnvSample, p: PanelParams) -> float:
    """Terminal current at zero volts."""
    return panel_current(0.0, env, p)


def power_curve(env: EnvSample, p: PanelParams, n: int = SCAN_POINTS):
    """Uniform (v, p) scan over [0, Voc] with ``n`` points."""
    voc = open_circuit_voltage(env, p)
    v = np.linspace(0.0, voc, n)
    return v, v * panel_current(v, env, p)


def true_mpp(env: EnvSample, p: PanelParams) -> OperatingPoint:
    """Maximum power point located by a uniform scan and golden-section refinement.

    The result never has lower power than the best scan point.

    Raises:
        NoLight: when ``env.g == 0``.
    """
    v, pw = power_curve(env, p)
    k = int(np.argmax(pw))
    lo, hi = v[max(k - 1, 0)], v[min(k + 1, len(v) - 1)]

    def power(x):
        return x * panel_current(x, env, p)

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = hi - invphi * (hi - lo), lo + invphi * (hi - lo)
    fc, fd = power(c), power(d)
    while hi - lo > 1e-10:
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = power(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = power(d)
    v_best = float(0.5 * (lo + hi))
    p_best = power(v_best)
    if p_best < pw[k]:
        v_best, p_best = float(v[k]), float(pw[k])
    i_best = panel_current(v_best, env, p)
    return OperatingPoint(v_pv=v_best, i_pv=i_best, p_pv=v_best * i_best)


def panel_from_mapping(values, section="panel") -> PanelParams:
    """Build PanelParams from a ``key -> str`` mapping (e.g. a config section)."""
    kwargs = {}
    for key, raw in values.items():
        if key not in _PANEL_KEYS:
            raise ConfigError(f"unknown key in [{section}]", key=key)
        try:
            kwargs[key] = int(raw) if key == "n_series" else float(raw)
        except ValueError:
            raise ConfigError(f"not a number: {raw!r}", key=key) from None
    missing = [k for k in ("voc_n", "isc_n", "kv", "ki") if k not in kwargs]
    if missing:
        raise ConfigError(f"[{section}] is missing required keys", key=missing[0])
    try:
        return PanelParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def reference_panel() -> PanelParams:
    """The bundled synthetic 200 W class panel (not a real datasheet)."""
    parser = configparser.ConfigParser()
    text = resources.files("pvtrack").joinpath("data/reference_panel.ini").read_text()
    parser.read_string(text)
    return panel_from_mapping(parser["panel"])
