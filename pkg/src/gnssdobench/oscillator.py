"""Phase integration of one simulated oscillator, with environment coupling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Y_SANITY, SimulationFault
from .noise import AgingModel, NoiseModel, WarmupModel, aging_y, warmup_y

MAX_ACCEL_G = 98.0


@dataclass(frozen=True)
class SineSweep:
    """Sinusoidal vibration with a logarithmic sweep from ``f_lo`` to ``f_hi``.

    ``f_lo == f_hi`` gives a fixed sine.
    """

    start: float
    duration: float
    amplitude: float
    f_lo: float
    f_hi: float

    @property
    def end(self) -> float:
        return self.start + self.duration

    @property
    def f_max(self) -> float:
        return max(self.f_lo, self.f_hi)

    def accel(self, t: np.ndarray) -> np.ndarray:
        u = t - self.start
        if self.f_lo == self.f_hi:
            phase = 2 * math.pi * self.f_lo * u
        else:
            k = math.log(self.f_hi / self.f_lo) / self.duration
            phase = 2 * math.pi * self.f_lo * np.expm1(k * u) / k
        return self.amplitude * np.sin(phase)


@dataclass(frozen=True)
class HalfSineShock:
    start: float
    duration: float
    amplitude: float

    @property
    def end(self) -> float:
        return self.start + self.duration

    @property
    def f_max(self) -> float:
        return 1.0 / (2.0 * self.duration)

    def accel(self, t: np.ndarray) -> np.ndarray:
        return self.amplitude * np.sin(math.pi * (t - self.start) / self.duration)


@dataclass(frozen=True)
class VibrationProfile:
    segments: tuple = ()

    def __post_init__(self):
        for seg in self.segments:
            if abs(seg.amplitude) > MAX_ACCEL_G:
                raise ValueError(f"segment amplitude {seg.amplitude} g exceeds the {MAX_ACCEL_G} g shaker ceiling")
            if seg.duration <= 0:
                raise ValueError("segment duration must be > 0")

    @property
    def end(self) -> float:
        return max((s.end for s in self.segments), default=0.0)

    def active(self, t0: float, t1: float) -> list:
        """Segments overlapping the interval ``[t0, t1)``."""
        return [s for s in self.segments if s.start < t1 and s.end > t0]


def env_acceleration(profile: VibrationProfile, t):
    """Acceleration in g along the sensitive axis; scalar or array ``t``."""
    t_arr = np.asarray(t, dtype=float)
    a = np.zeros_like(t_arr)
    for seg in profile.segments:
        inside = (t_arr >= seg.start) & (t_arr <= seg.end)
        if inside.any():
            a = a + np.where(inside, seg.accel(t_arr), 0.0)
    return float(a) if a.ndim == 0 else a


@dataclass(frozen=True)
class OscillatorParams:
    """Behavioral parameters of one oscillator model.

    ``post_exposure_settling`` restarts a warm-up transient when a mechanical or
    EMI exposure ends; ``holdover_drift`` starts one when the disciplining loop
    enters holdover.
    """

    f0: float = 10e6
    noise: NoiseModel = field(default_factory=NoiseModel)
    warmup: WarmupModel | None = None
    aging: AgingModel = field(default_factory=AgingModel)
    gamma: float = 0.0
    emi_outlier_rate0: float = 0.0
    emi_outlier_scale: float = 0.0
    post_exposure_settling: WarmupModel | None = None
    holdover_drift: WarmupModel | None = None

    def __post_init__(self):
        if not self.f0 > 0:
            raise ValueError("f0 must be > 0")
        if self.gamma < 0 or self.emi_outlier_rate0 < 0 or self.emi_outlier_scale < 0:
            raise ValueError("gamma and EMI rates/scales must be >= 0")


@dataclass(frozen=True)
class OscillatorState:
    t: float = 0.0
    x: float = 0.0
    y_ctrl: float = 0.0
    pps_offset: float = 0.0
    emi_events: int = 0
    # transient output excursion from EMI hits in the last step; cleared by the next one
    glitch: float = 0.0

    @property
    def x_out(self) -> float:
        return self.x + self.glitch


def _check_y(y, t):
    if not np.all(np.abs(y) < Y_SANITY):
        raise SimulationFault(f"fractional frequency left the sanity bound at t={t:.6f} s")


def advance(state: OscillatorState, params: OscillatorParams, dt: float, accel, y_cmd: float,
            rng: np.random.Generator | None = None, *, y_noise: float = 0.0,
            y_extra: float = 0.0, emi_rate: float | None = None) -> OscillatorState:
    """Forward-Euler integration over ``len(accel)`` sub-steps of ``dt``.

    Equivalent to calling :func:`step` once per element of ``accel``;
    ``y_noise`` and ``y_extra`` are held constant over the call.
    """
    if not 0 < dt <= 1.0:
        raise ValueError(f"dt must be in (0, 1] s, got {dt}")
    accel = np.atleast_1d(np.asarray(accel, dtype=float))
    if not np.all(np.abs(accel) <= MAX_ACCEL_G):
        raise SimulationFault(f"acceleration exceeds {MAX_ACCEL_G} g at t={state.t:.6f} s")
    n = accel.size
    if n == 1:
        # scalar fast path, same arithmetic as the vector branch
        t = state.t
        y = y_noise + y_extra + y_cmd + params.aging.rate * t + params.gamma * float(accel[0])
        if params.warmup is not None:
            y += warmup_y(params.warmup, t)
        if not abs(y) < Y_SANITY:
            raise SimulationFault(f"fractional frequency left the sanity bound at t={t:.6f} s")
        x = state.x + y * dt
    else:
        t = state.t + np.arange(n) * dt
        y = y_noise + y_extra + y_cmd + aging_y(params.aging, t) + params.gamma * accel
        if params.warmup is not None:
            y = y + warmup_y(params.warmup, t)
        _check_y(y, state.t)
        x = state.x + float(np.sum(y)) * dt
    events = 0
    glitch = 0.0
    rate = params.emi_outlier_rate0 if emi_rate is None else emi_rate
    if rate > 0.0 and params.emi_outlier_scale > 0.0:
        if rng is None:
            raise ValueError("an EMI outlier rate needs a random generator")
        p = min(1.0, rate * dt)
        hits = rng.random(n) < p
        events = int(hits.sum())
        if events:
            glitch = float(rng.laplace(0.0, params.emi_outlier_scale, events).sum())
    if not math.isfinite(x):
        raise SimulationFault(f"time error diverged at t={state.t:.6f} s")
    return replace(state, t=state.t + n * dt, x=x, y_ctrl=y_cmd, emi_events=state.emi_events + events,
                   glitch=glitch)


def step(state: OscillatorState, params: OscillatorParams, dt: float, a: float, y_cmd: float,
         rng: np.random.Generator | None = None, *, y_noise: float = 0.0,
         y_extra: float = 0.0, emi_rate: float | None = None) -> OscillatorState:
    """One Euler step: ``x += (noise + warm-up + aging + gamma*a + y_cmd) * dt``.

    With probability ``rate * dt`` a Laplace-distributed phase excursion of
    scale ``emi_outlier_scale`` is applied to the outputs.  It lasts until the
    next step, so it shows up as an isolated spike rather than a lasting offset.
    """
    return advance(state, params, dt, [a], y_cmd, rng, y_noise=y_noise, y_extra=y_extra, emi_rate=emi_rate)


def fm_to_pm_amplitude(gamma: float, accel_amplitude: float, freq: float) -> float:
    """Peak time deviation from sinusoidal acceleration through g-sensitivity."""
    return gamma * accel_amplitude / (2.0 * math.pi * freq)
