import math

import numpy as np
import pytest
from scipy.stats import chi2

from gnssdobench.core import SimulationFault
from gnssdobench.noise import AgingModel, WarmupModel
from gnssdobench.oscillator import (HalfSineShock, OscillatorParams, OscillatorState, SineSweep,
                                    VibrationProfile, advance, env_acceleration, fm_to_pm_amplitude, step)


def test_env_acceleration_examples():
    sine = VibrationProfile((SineSweep(0.0, 1.0, 2.0, 100.0, 100.0),))
    assert env_acceleration(sine, 0.0025) == pytest.approx(2.0)
    assert env_acceleration(sine, 5.0) == 0.0
    shock = VibrationProfile((HalfSineShock(10.0, 0.011, 30.0),))
    assert env_acceleration(shock, 10.0055) == pytest.approx(30.0)
    assert env_acceleration(shock, 9.0) == 0.0
    arr = env_acceleration(sine, np.array([0.0025, 2.0]))
    assert arr.tolist() == pytest.approx([2.0, 0.0])


def test_sweep_frequency_runs_from_low_to_high():
    sweep = SineSweep(0.0, 10.0, 1.0, 10.0, 1000.0)
    t = np.arange(0, 10.0, 1e-5)
    a = sweep.accel(t)
    crossings = np.flatnonzero(np.diff(np.signbit(a)))
    early = np.sum(crossings < 1e5 // 10)
    late = np.sum(crossings > 9 * 1e5 // 10)
    assert late > 20 * early
    assert sweep.f_max == 1000.0


def test_vibration_ceiling():
    with pytest.raises(ValueError):
        VibrationProfile((SineSweep(0.0, 1.0, 99.0, 10.0, 10.0),))
    with pytest.raises(SimulationFault):
        advance(OscillatorState(), OscillatorParams(), 0.01, [120.0], 0.0)


def test_zero_contributions_leave_phase_unchanged():
    s = step(OscillatorState(x=1e-9), OscillatorParams(), 1.0, 0.0, 0.0)
    assert s.x == 1e-9 and s.t == 1.0


def test_constant_frequency_accumulates_linearly():
    params = OscillatorParams()
    s = OscillatorState()
    xs = []
    for _ in range(3600):
        s = step(s, params, 1.0, 0.0, 1e-9)
        xs.append(s.x)
    assert s.x == pytest.approx(3.6e-6, rel=1e-12)
    np.testing.assert_allclose(xs, 1e-9 * np.arange(1, 3601), rtol=1e-12)


def test_advance_equals_repeated_steps():
    params = OscillatorParams(gamma=1e-9, warmup=WarmupModel(2e-9, 50.0), aging=AgingModel(1e-12))
    accel = np.sin(np.arange(50) * 0.3)
    a = OscillatorState(t=3.0)
    for v in accel:
        a = step(a, params, 0.02, float(v), 5e-11)
    b = advance(OscillatorState(t=3.0), params, 0.02, accel, 5e-11)
    assert b.t == pytest.approx(a.t)
    assert b.x == pytest.approx(a.x, rel=1e-12)


def test_fm_to_pm_example():
    assert fm_to_pm_amplitude(1e-9, 2.0, 100.0) == pytest.approx(3.183e-12, rel=1e-3)


def test_fm_to_pm_numerical_integration():
    gamma, amp, freq = 1e-9, 2.0, 100.0
    dt = 1.0 / (100 * freq)
    profile = VibrationProfile((SineSweep(0.0, 0.2, amp, freq, freq),))
    params = OscillatorParams(gamma=gamma)
    s = OscillatorState()
    xs = []
    for k in range(int(0.2 / dt)):
        s = step(s, params, dt, env_acceleration(profile, k * dt), 0.0)
        xs.append(s.x)
    xs = np.array(xs)
    peak = (xs.max() - xs.min()) / 2
    assert peak == pytest.approx(fm_to_pm_amplitude(gamma, amp, freq), rel=0.02)


def test_sanity_bound_and_dt():
    with pytest.raises(SimulationFault):
        step(OscillatorState(), OscillatorParams(), 1.0, 0.0, 2e-3)
    with pytest.raises(ValueError):
        step(OscillatorState(), OscillatorParams(), 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        step(OscillatorState(), OscillatorParams(), 2.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        OscillatorParams(gamma=-1.0)


def test_emi_needs_a_generator():
    params = OscillatorParams(emi_outlier_rate0=1.0, emi_outlier_scale=1e-9)
    with pytest.raises(ValueError):
        step(OscillatorState(), params, 1.0, 0.0, 0.0)


def test_emi_glitch_is_transient():
    params = OscillatorParams(emi_outlier_rate0=1.0, emi_outlier_scale=1e-8)
    rng = np.random.default_rng(1)
    s = step(OscillatorState(), params, 1.0, 0.0, 0.0, rng)
    assert s.emi_events == 1 and s.glitch != 0.0
    assert s.x == 0.0 and s.x_out == s.glitch
    s = step(s, params, 1.0, 0.0, 0.0, rng, emi_rate=0.0)
    assert s.glitch == 0.0 and s.x_out == 0.0 and s.emi_events == 1


def test_emi_counts_are_poisson():
    rate, gain, duration, runs = 0.01, 4.0, 500, 100
    params = OscillatorParams(emi_outlier_rate0=rate, emi_outlier_scale=1e-9)
    counts = []
    for seed in range(runs):
        rng = np.random.default_rng(seed)
        s = OscillatorState()
        for _ in range(duration):
            s = step(s, params, 1.0, 0.0, 0.0, rng, emi_rate=rate * gain)
        counts.append(s.emi_events)
    counts = np.array(counts)
    mean = rate * gain * duration
    assert counts.mean() == pytest.approx(mean, rel=0.1)
    # dispersion test: sum (k - mu)^2 / mu ~ chi2(runs - 1) under Poisson
    stat = float(np.sum((counts - counts.mean()) ** 2) / counts.mean())
    p = 2 * min(chi2.cdf(stat, runs - 1), chi2.sf(stat, runs - 1))
    assert p > 0.01


def test_linear_phase_without_noise_exact():
    s = OscillatorState()
    params = OscillatorParams()
    for _ in range(10):
        s = step(s, params, 0.5, 0.0, -2.5e-10)
    assert s.x == pytest.approx(-1.25e-9, rel=1e-14)
    assert math.isfinite(s.x)
