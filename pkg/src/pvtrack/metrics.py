"""Post-hoc trace metrics and harmonic distortion analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import EmptyTrace, InsufficientSamples, ZeroFundamental, ZeroIdeal
from .sim import Trace

SETTLING_BAND = 0.02
DEFAULT_HARMONICS = 50


@dataclass(frozen=True)
class SummaryMetrics:
    tracking_efficiency: float
    settling_steps: List[Optional[int]]
    steady_ripple: float
    mean_power: float


def tracking_efficiency(trace: Trace) -> float:
    """Harvested energy over the energy an ideal tracker would harvest.

    Raises:
        EmptyTrace: for a trace with no records.
        ZeroIdeal: if any record has zero ideal power (e.g. darkness).
    """
    if len(trace) == 0:
        raise EmptyTrace("tracking efficiency of an empty trace")
    p = np.array(trace.column("p_pv"))
    ideal = np.array(trace.column("p_ideal"))
    if np.any(ideal <= 0):
        raise ZeroIdeal(f"record {int(np.argmax(ideal <= 0))} has no ideal power")
    return float(np.sum(p * trace.dt) / np.sum(ideal * trace.dt))


def settling_steps(trace: Trace, disturbance_time: float,
                   band: float = SETTLING_BAND) -> Optional[int]:
    """Steps after ``disturbance_time`` until power stays within ``band`` of ideal.

    A record is inside the band when ``p_pv >= (1 - band) * p_ideal``.
    Returns 0 if the trace never leaves the band after the disturbance and
    None (not settled) if the last record is still outside.
    """
    times = np.array(trace.column("time"))
    if len(times) == 0 or not times[0] - 1e-12 <= disturbance_time <= times[-1] + 1e-12:
        raise ValueError(f"disturbance time {disturbance_time} lies outside the trace")
    k0 = int(np.searchsorted(times, disturbance_time - 1e-9 * trace.dt))
    p = np.array(trace.column("p_pv"))[k0:]
    ideal = np.array(trace.column("p_ideal"))[k0:]
    outside = np.flatnonzero(p < (1.0 - band) * ideal)
    if len(outside) == 0:
        return 0
    if outside[-1] == len(p) - 1:
        return None
    return int(outside[-1]) + 1


def steady_ripple(trace: Trace, tail: float = 0.2) -> float:
    """Peak-to-peak panel power (W) over the final ``tail`` fraction of the trace."""
    p = trace.column("p_pv")
    n = max(1, int(len(p) * tail))
    window = p[-n:]
    return float(max(window) - min(window))


def summarize(trace: Trace, band: float = SETTLING_BAND) -> SummaryMetrics:
    return SummaryMetrics(
        tracking_efficiency=tracking_efficiency(trace),
        settling_steps=[settling_steps(trace, t, band) for t in trace.disturbance_times],
        steady_ripple=steady_ripple(trace),
        mean_power=float(np.mean(trace.column("p_pv"))),
    )


@dataclass(frozen=True)
class WaveformSamples:
    """Uniformly sampled waveform with a known fundamental frequency."""

    samples: np.ndarray
    sample_rate: float
    fundamental: float

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if not self.sample_rate > 0 or not self.fundamental > 0:
            raise ValueError("sample rate and fundamental must be positive")

    @property
    def samples_per_period(self) -> float:
        return self.sample_rate / self.fundamental


def thd(w: WaveformSamples, n_harmonics: int = DEFAULT_HARMONICS) -> float:
    """Total harmonic distortion in percent.

    Harmonic amplitudes are single-bin DFT projections at h * f0, h = 1..n,
    over the largest whole number of fundamental periods in the record
    (rectangular window). Exact for synchronous sampling.

    Raises:
        InsufficientSamples: fewer than two periods, or too low a sample rate
            to resolve ``n_harmonics``.
        ZeroFundamental: if the fundamental is negligible against the signal.
    """
    if n_harmonics < 2:
        raise ValueError("n_harmonics must be at least 2")
    spp = w.samples_per_period
    if len(w.samples) < 2 * spp:
        raise InsufficientSamples(f"{len(w.samples)} samples cover less than two periods")
    if not w.sample_rate > 2 * w.fundamental * n_harmonics:
        raise InsufficientSamples(
            f"sample rate {w.sample_rate} Hz cannot resolve {n_harmonics} harmonics of {w.fundamental} Hz")
    periods = math.floor(len(w.samples) / spp + 1e-9)
    n = min(len(w.samples), int(round(periods * spp)))
    x = w.samples[:n]
    phase = 2j * np.pi * w.fundamental * np.arange(n) / w.sample_rate
    h = np.arange(1, n_harmonics + 1)
    amps = 2.0 / n * np.abs(np.exp(-np.outer(h, phase)) @ x)
    rms = math.sqrt(float(np.mean(x * x)))
    if amps[0] == 0 or amps[0] < 1e-12 * rms:
        raise ZeroFundamental("fundamental amplitude is negligible")
    return float(math.sqrt(float(np.sum(amps[1:] ** 2))) / amps[0] * 100.0)
