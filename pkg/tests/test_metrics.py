import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import square_wave_thd_series
from pvtrack.environment import canonical_scenario
from pvtrack.errors import EmptyTrace, InsufficientSamples, ZeroFundamental, ZeroIdeal
from pvtrack.metrics import (WaveformSamples, settling_steps, steady_ripple, summarize, thd,
                             tracking_efficiency)
from pvtrack.sim import Trace, TraceRecord, simulate


def make_trace(p, ideal, dt=0.01):
    recs = [TraceRecord(k * dt, 1000, 25, 0.5, 30, pk / 30, pk, ik)
            for k, (pk, ik) in enumerate(zip(p, ideal))]
    return Trace(recs, dt)


def sine(f0=50.0, fs=10_000.0, periods=4, phase=0.0, harmonics=()):
    t = np.arange(int(round(periods * fs / f0))) / fs
    x = np.sin(2 * np.pi * f0 * t + phase)
    for h, a in harmonics:
        x = x + a * np.sin(2 * np.pi * h * f0 * t + 0.3 * h)
    return WaveformSamples(x, fs, f0)


class TestTrackingEfficiency:
    def test_pinned(self):
        assert tracking_efficiency(make_trace([200.0] * 10, [200.0] * 10)) == pytest.approx(1.0, abs=1e-6)

    def test_zero(self):
        assert tracking_efficiency(make_trace([0.0] * 5, [150.0] * 5)) == 0.0

    def test_errors(self):
        with pytest.raises(EmptyTrace):
            tracking_efficiency(Trace([], 0.01))
        with pytest.raises(ZeroIdeal):
            tracking_efficiency(make_trace([0, 0], [100, 0]))

    def test_time_rescaling_invariant(self):
        p, ideal = [100, 150, 190], [200, 200, 200]
        assert tracking_efficiency(make_trace(p, ideal, 0.01)) == pytest.approx(
            tracking_efficiency(make_trace(p, ideal, 7.5)), rel=1e-12)

    def test_hybrid_stc(self):
        assert tracking_efficiency(simulate(canonical_scenario("stc"))) >= 0.97


class TestSettling:
    def test_inside_band(self):
        assert settling_steps(make_trace([199] * 10, [200] * 10), 0.03) == 0

    def test_never_settles(self):
        assert settling_steps(make_trace([100] * 10, [200] * 10), 0.03) is None

    def test_counts_steps(self):
        p = [200, 200, 100, 150, 199, 150, 199, 199]
        assert settling_steps(make_trace(p, [200] * 8), 0.02) == 4

    def test_out_of_trace(self):
        with pytest.raises(ValueError):
            settling_steps(make_trace([1, 1], [1, 1]), 5.0)

    def test_hybrid_settles_faster_than_po(self):
        sc = canonical_scenario("temperature_step")
        hybrid = settling_steps(simulate(sc.with_controller("hybrid")), 2.5)
        po = settling_steps(simulate(sc.with_controller("po")), 2.5)
        assert hybrid is not None
        assert po is None or hybrid < po


def test_summary_fields():
    s = summarize(simulate(canonical_scenario("irradiance_step")))
    assert 0 <= s.tracking_efficiency <= 1
    assert len(s.settling_steps) == 1
    assert s.steady_ripple >= 0 and s.mean_power > 0


def test_ripple():
    assert steady_ripple(make_trace([1, 2, 3, 4, 5, 6, 7, 8, 9, 10], [10] * 10), tail=0.3) == 2


class TestTHD:
    def test_pure_sine(self):
        assert thd(sine()) == pytest.approx(0.0, abs=1e-6)

    def test_third_harmonic(self):
        assert thd(sine(harmonics=[(3, 0.1)])) == pytest.approx(10.0, abs=1e-4)

    def test_two_harmonics(self):
        expected = 100 * math.hypot(0.05, 0.02)
        assert thd(sine(harmonics=[(5, 0.05), (7, 0.02)])) == pytest.approx(expected, abs=1e-6)

    def test_square_wave_near_nyquist_matches_full_series(self):
        # 102 samples/period: every aliased harmonic lands at or below h=51
        f0 = 50.0
        fs = 102 * f0
        x = np.where(np.arange(102 * 20) % 102 < 51, 1.0, -1.0)
        assert thd(WaveformSamples(x, fs, f0), 50) == pytest.approx(square_wave_thd_series(), abs=0.2)

    def test_square_wave_oversampled_matches_truncated_series(self):
        f0 = 50.0
        fs = 2000 * f0
        x = np.where(np.arange(2000 * 4) % 2000 < 1000, 1.0, -1.0)
        assert thd(WaveformSamples(x, fs, f0), 50) == pytest.approx(
            square_wave_thd_series(49), abs=0.02)

    def test_partial_period_tail_ignored(self):
        w = sine(periods=4.37, harmonics=[(3, 0.1)])
        assert thd(w) == pytest.approx(10.0, abs=1e-4)

    def test_insufficient_samples(self):
        with pytest.raises(InsufficientSamples):
            thd(sine(periods=1.5))
        with pytest.raises(InsufficientSamples):
            thd(sine(fs=4000.0), 50)

    def test_zero_fundamental(self):
        w = sine(harmonics=[(3, 1.0)])
        x = w.samples - np.sin(2 * np.pi * 50 * np.arange(len(w.samples)) / w.sample_rate)
        with pytest.raises(ZeroFundamental):
            thd(WaveformSamples(x, w.sample_rate, 50.0))
        with pytest.raises(ZeroFundamental):
            thd(WaveformSamples(np.zeros(400), 10_000.0, 50.0))

    def test_bad_harmonic_count(self):
        with pytest.raises(ValueError):
            thd(sine(), 1)


@settings(max_examples=30, deadline=None)
@given(scale=st.floats(1e-3, 1e3), shift=st.integers(0, 199),
       a3=st.floats(0, 0.5), a5=st.floats(0, 0.5))
def test_thd_scale_and_shift_invariant(scale, shift, a3, a5):
    base = sine(periods=6, harmonics=[(3, a3), (5, a5)])
    ref = thd(base)
    x = np.roll(base.samples, shift) * scale
    assert thd(WaveformSamples(x, base.sample_rate, base.fundamental)) == pytest.approx(
        ref, rel=1e-9, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(h=st.integers(2, 50), a=st.floats(1e-3, 0.5))
def test_adding_harmonic_increases_thd(h, a):
    base = sine(harmonics=[(3, 0.05)])
    extra = base.samples + a * np.sin(2 * np.pi * h * 50 * np.arange(len(base.samples)) / 10_000.0)
    assert thd(WaveformSamples(extra, 10_000.0, 50.0)) > thd(base)
