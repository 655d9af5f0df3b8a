"""Executes a scenario: per-second control ticks, oscillator sub-stepping, pairing."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .. import __version__
from ..core import PPS, TENMHZ, RandomStream, TimeErrorSeries, split_stream
from ..discipline import DisciplineState, Mode, control_epoch
from ..gnss import reference_pps_series
from ..metrics import window_ranges
from ..noise import gen_powerlaw_y, warmup_y
from ..oscillator import OscillatorState, advance, env_acceleration, step
from ..sdr import measure_series_waveform, pair_time_error
from .archetypes import Archetype, load_archetype
from .spec import ScenarioSpec, SpecError, spec_hash, validate

# child stream indices below a device's stream
NOISE_STREAM, JITTER_STREAM, EMI_STREAM, MEASURE_STREAM = range(4)


@dataclass
class DutTrace:
    label: str
    archetype: str
    series: dict[str, TimeErrorSeries]
    modes: np.ndarray
    fix: np.ndarray
    emi_events: np.ndarray
    first_fix: float | None
    holdover_entries: list[float] = field(default_factory=list)
    reacquisitions: list[float] = field(default_factory=list)


@dataclass
class RunResult:
    spec: ScenarioSpec
    duts: list[DutTrace]
    pairs: dict[tuple[int, int], dict[str, TimeErrorSeries]]
    env: dict[str, np.ndarray]
    meta: dict

    def pair_series(self, a: int, b: int, kind: str = PPS) -> TimeErrorSeries:
        return self.pairs[(a, b)][kind]

    def pair_of(self, dut: int) -> tuple[int, int]:
        for pair in self.spec.pairs:
            if dut in pair:
                return pair
        raise KeyError(f"device {dut} is not part of any pair")


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("GNSSDOBENCH_THREADS", "1")))
    except ValueError:
        return 1


def _substep_dt(segments) -> float:
    f_max = max(seg.f_max for seg in segments)
    return min(1.0, 1.0 / (100.0 * f_max))


def _simulate_dut(spec: ScenarioSpec, index: int, arch: Archetype) -> DutTrace:
    dut = spec.duts[index]
    n = spec.n_ticks
    stream = split_stream(RandomStream(spec.seed), index)
    params = arch.oscillator
    if not dut.cold_start:
        params = replace(params, warmup=None)
    dparams = arch.discipline
    timeline = spec.gnss.with_outages(dut.gnss_outages)
    if not dut.cold_start:
        timeline = replace(timeline, fix_acquire_delay=0.0)
    ref = reference_pps_series(timeline, n, split_stream(stream, JITTER_STREAM))
    jitter = ref - np.arange(n)
    y_noise = gen_powerlaw_y(params.noise, n, 1.0, split_stream(stream, NOISE_STREAM)).tolist()
    emi_gen = split_stream(stream, EMI_STREAM).generator()

    thrust = spec.thrust if dut.placement_gain > 0 else None
    shaker = spec.vibration if dut.shaker and spec.vibration.segments else None
    triggers: list[tuple[float, object]] = []
    if params.post_exposure_settling is not None and dut.settling:
        ends = []
        if shaker is not None:
            ends.append(shaker.end)
        if thrust is not None:
            ends.append(thrust.end)
        if ends:
            triggers.append((max(ends), params.post_exposure_settling))

    osc = OscillatorState(t=0.0)
    disc = DisciplineState() if dut.cold_start else DisciplineState.locked()
    x10 = np.empty(n)
    xpps = np.empty(n)
    modes = np.empty(n, dtype=np.int8)
    events = np.empty(n, dtype=np.int32)
    holdovers, reacq = [], []
    first_fix = None
    jitter_list = jitter.tolist()
    for k in range(n):
        t = float(k)
        x10[k] = osc.x_out
        xpps[k] = osc.x_out + osc.pps_offset
        j = jitter_list[k]
        e = None if math.isnan(j) else xpps[k] - j
        prev_mode = disc.mode
        disc, y_cmd, pps_step = control_epoch(disc, dparams, e, osc)
        if pps_step:
            osc = replace(osc, pps_offset=osc.pps_offset + pps_step)
        if disc.mode != prev_mode:
            if disc.mode == Mode.HOLDOVER:
                holdovers.append(t)
                if params.holdover_drift is not None:
                    triggers.append((t, params.holdover_drift))
            elif disc.mode == Mode.RECOVERY:
                reacq.append(t)
            elif disc.mode == Mode.ACQUIRING:
                first_fix = t
        modes[k] = disc.mode
        y_extra = 0.0
        for t_trig, model in triggers:
            if t >= t_trig:
                y_extra += warmup_y(model, t - t_trig)
        emi_rate = 0.0
        if thrust is not None:
            emi_rate = params.emi_outlier_rate0 * dut.placement_gain * thrust.activity(t)
        segs = shaker.active(t, t + 1.0) if shaker is not None else ()
        if segs:
            n_sub = int(math.ceil(1.0 / _substep_dt(segs)))
            dt = 1.0 / n_sub
            accel = env_acceleration(shaker, t + np.arange(n_sub) * dt)
            osc = advance(osc, params, dt, accel, y_cmd, emi_gen,
                          y_noise=y_noise[k], y_extra=y_extra, emi_rate=emi_rate)
        else:
            osc = step(osc, params, 1.0, 0.0, y_cmd, emi_gen,
                       y_noise=y_noise[k], y_extra=y_extra, emi_rate=emi_rate)
        osc = replace(osc, t=t + 1.0)
        events[k] = osc.emi_events
    if dut.cold_start and first_fix is None and disc.mode != Mode.WARMUP:
        first_fix = 0.0
    if not dut.cold_start:
        first_fix = 0.0

    label = spec.dut_label(index)
    cap = spec.capture
    mgen = split_stream(stream, MEASURE_STREAM).generator()
    if cap.fidelity == "waveform":
        m10 = measure_series_waveform(x10, TENMHZ, params.f0, cap, mgen)
        mpps = measure_series_waveform(xpps, PPS, params.f0, cap, mgen)
    else:
        m10 = x10 + cap.floor_10mhz * mgen.standard_normal(n)
        mpps = xpps + cap.floor_pps * mgen.standard_normal(n)
    series = {
        TENMHZ: TimeErrorSeries(0.0, 1.0, m10, f"{label} {TENMHZ}", TENMHZ),
        PPS: TimeErrorSeries(0.0, 1.0, mpps, f"{label} {PPS}", PPS),
    }
    fix = ~np.isnan(jitter)
    return DutTrace(label, arch.name, series, modes, fix, events, first_fix, holdovers, reacq)


def _environment(spec: ScenarioSpec) -> dict[str, np.ndarray]:
    n = spec.n_ticks
    t = np.arange(n, dtype=float)
    env = {"t_s": t}
    peak = np.zeros(n)
    for seg in spec.vibration.segments:
        k0, k1 = int(math.floor(seg.start)), int(math.ceil(seg.end))
        peak[k0:min(k1, n)] = np.maximum(peak[k0:min(k1, n)], abs(seg.amplitude))
    env["accel_peak_g"] = peak
    if spec.thrust is not None:
        env["thrust_pw_us"] = np.array([spec.thrust.pulse_width(v) for v in t])
        env["thrust_activity"] = np.array([spec.thrust.activity(v) for v in t])
    else:
        env["thrust_pw_us"] = np.full(n, 1100.0)
        env["thrust_activity"] = np.zeros(n)
    env["satellites"] = np.array([spec.gnss.satellites(v) for v in t], dtype=float)
    return env


def run(spec: ScenarioSpec, archetypes: dict[str, Archetype] | None = None) -> RunResult:
    """Simulate every device of ``spec`` and form the requested pairs."""
    validate(spec)
    resolved = {}
    problems = []
    for i, d in enumerate(spec.duts):
        if archetypes and d.archetype in archetypes:
            resolved[i] = archetypes[d.archetype]
            continue
        try:
            resolved[i] = load_archetype(d.archetype)
        except KeyError as exc:
            problems.append((f"duts[{i}].archetype", str(exc.args[0])))
    if problems:
        raise SpecError(problems)

    workers = min(_threads(), len(spec.duts))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            traces = list(pool.map(lambda i: _simulate_dut(spec, i, resolved[i]), range(len(spec.duts))))
    else:
        traces = [_simulate_dut(spec, i, resolved[i]) for i in range(len(spec.duts))]

    pairs = {}
    for a, b in spec.pairs:
        pairs[(a, b)] = {
            kind: pair_time_error(traces[a].series[kind], traces[b].series[kind],
                                  f"{traces[a].label}-{traces[b].label} {kind}")
            for kind in (PPS, TENMHZ)
        }
    meta = {"spec_hash": spec_hash(spec), "seed": spec.seed, "version": __version__,
            "scenario": spec.name, "tau0_s": 1.0, "n_samples": spec.n_ticks}
    return RunResult(spec, traces, pairs, _environment(spec), meta)


def usability_index(series: TimeErrorSeries, window: float, mtie_budget: float) -> int | None:
    """First sample index from which every window keeps its peak-to-peak within budget."""
    m = int(round(window / series.tau0))
    x = series.samples
    if x.size < m + 1:
        return None
    ranges = window_ranges(x, m + 1)
    bad = np.flatnonzero(ranges > mtie_budget)
    if bad.size == 0:
        return 0
    idx = int(bad[-1]) + 1
    return idx if idx < ranges.size else None


def usability_time(result: RunResult, dut: int, window: float, mtie_budget: float,
                   kind: str = PPS) -> float | None:
    """Seconds from the device's first valid fix until its pair series is usable.

    Returns None when the budget is never met for a full window within the run.
    """
    a, b = result.pair_of(dut)
    series = result.pair_series(a, b, kind)
    first_fix = result.duts[dut].first_fix or 0.0
    start = int(first_fix) + 1 if result.spec.duts[dut].cold_start else 0
    idx = usability_index(series.slice(start), window, mtie_budget)
    if idx is None:
        return None
    return max(0.0, start + idx - first_fix) if result.spec.duts[dut].cold_start else float(idx)
