"""Sample-level model of the SDR phase-comparison measurement system.

A positive time error delays the signal: the 10 MHz waveform is
``sin(2*pi*f0*(t - x))`` and the PPS edge crosses its threshold at ``k + x``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .core import PPS, TENMHZ, TimeErrorSeries


class MeasurementInvalid(ValueError):
    """A block is too noisy to yield a phase estimate."""


class EdgeDetectionError(ValueError):
    def __init__(self, count: int):
        super().__init__(f"expected exactly one rising threshold crossing, found {count}")
        self.count = count


class AlignmentError(ValueError):
    pass


FIDELITIES = ("phase", "waveform")


@dataclass(frozen=True)
class CaptureConfig:
    """Digitizer and estimator settings.

    ``snr_db`` (None = noiseless) is relative to a full-scale sine and applies
    to the 10 MHz channel; ``pps_snr_db`` to the PPS channel.  ``floor_10mhz``
    and ``floor_pps`` are the white-PM floors added to phase-level runs in
    place of the waveform layer.
    """

    fidelity: str = "phase"
    fs: float = 100e6
    block_len: int = 100_000
    snr_db: float | None = None
    pps_threshold: float = 0.5
    pps_rise_time: float = 1e-6
    pps_snr_db: float | None = None
    min_snr_db: float = 10.0
    floor_10mhz: float = 20e-12
    floor_pps: float = 50e-12

    def __post_init__(self):
        if self.fidelity not in FIDELITIES:
            raise ValueError(f"fidelity must be one of {FIDELITIES}")
        if self.block_len < 100:
            raise ValueError("block_len must be >= 100")
        if not self.fs > 0 or not 0 < self.pps_threshold < 1 or not self.pps_rise_time > 0:
            raise ValueError("fs, pps_threshold and pps_rise_time out of range")
        if self.floor_10mhz < 0 or self.floor_pps < 0:
            raise ValueError("measurement floors must be >= 0")

    def check_f0(self, f0: float):
        if not self.fs > 2 * f0:
            raise ValueError(f"fs={self.fs} Hz cannot capture f0={f0} Hz")


def noise_sigma(snr_db: float | None) -> float:
    """Per-sample noise std for a unit-amplitude sine (power 1/2)."""
    if snr_db is None or math.isinf(snr_db):
        return 0.0
    return math.sqrt(0.5 / 10.0 ** (snr_db / 10.0))


def synth_sine_block(x_te, f0: float, cfg: CaptureConfig, rng: np.random.Generator | None = None,
                     t_start: float = 0.0) -> np.ndarray:
    """``cfg.block_len`` samples of the delayed sine plus white noise.

    ``x_te`` may be a scalar or an array with one value per sample.
    """
    s = _delayed_sine(f0, cfg, t_start, np.asarray(x_te, dtype=float))
    sigma = noise_sigma(cfg.snr_db)
    if sigma:
        if rng is None:
            raise ValueError("a noisy block needs a random generator")
        noise = rng.standard_normal(cfg.block_len)
        noise *= sigma
        s += noise
    return s


_REFERENCE_CACHE: dict = {}


@functools.lru_cache(maxsize=4)
def _sample_times(fs: float, n: int) -> np.ndarray:
    t = np.arange(n) / fs
    t.flags.writeable = False
    return t


def _delayed_sine(f0: float, cfg: CaptureConfig, t_start: float, x: np.ndarray) -> np.ndarray:
    """``sin(2 pi f0 (t - x))`` over one block, by angle addition on the cached reference.

    The residual phase ``psi = 2 pi f0 (t_start - x)`` varies slowly across a
    block, so its sine and cosine come from a short Taylor expansion around
    the block-centre value whenever the spread is below 1e-2 rad (truncation
    error below 1e-15).  Wider spreads use ``np.cos``/``np.sin`` directly.
    """
    ref_sin, ref_cos = _reference(f0, cfg.fs, cfg.block_len)
    w = 2 * np.pi * f0
    theta0 = math.fmod(w * t_start, 2 * np.pi)
    if x.ndim == 0:
        psi = theta0 - w * float(x)
        return ref_sin * math.cos(psi) + ref_cos * math.sin(psi)
    if x.size != cfg.block_len:
        raise ValueError(f"delay has {x.size} values, expected {cfg.block_len}")
    # in-place arithmetic: fresh block-sized temporaries dominate the cost otherwise
    eps = x * -w
    mid = theta0 + float(eps[eps.size // 2])
    eps += theta0 - mid
    if float(np.max(np.abs(eps))) > 1e-2:
        eps += mid
        return ref_sin * np.cos(eps) + ref_cos * np.sin(eps)
    e2 = eps * eps
    cos_e = e2 * (-1.0 / 720)
    cos_e += 1.0 / 24
    cos_e *= e2
    cos_e -= 0.5
    cos_e *= e2
    cos_e += 1.0
    sin_e = e2 * (-1.0 / 120)
    sin_e += 1.0 / 6
    sin_e *= e2
    np.subtract(1.0, sin_e, out=sin_e)
    sin_e *= eps
    cm, sm = math.cos(mid), math.sin(mid)
    out = cos_e * cm
    out -= sin_e * sm
    out *= ref_sin
    cos_e *= sm
    sin_e *= cm
    cos_e += sin_e
    cos_e *= ref_cos
    out += cos_e
    return out


def _reference(f0: float, fs: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    key = (f0, fs, n)
    if key not in _REFERENCE_CACHE:
        arg = 2 * np.pi * f0 * np.arange(n) / fs
        _REFERENCE_CACHE.clear()
        _REFERENCE_CACHE[key] = (np.sin(arg), np.cos(arg))
    return _REFERENCE_CACHE[key]


def estimate_te_10mhz(block: np.ndarray, f0: float, cfg: CaptureConfig, prev_unwrap: int = 0,
                      prev_te: float | None = None) -> tuple[float, int]:
    """Quadrature phase estimate of one block, unwrapped for continuity.

    The raw estimate lies within half a carrier period; whole periods are added
    so the result lands closest to ``prev_te`` (or uses ``prev_unwrap`` as is
    when there is no previous estimate).  Returns ``(te, unwrap)``.
    """
    block = np.asarray(block, dtype=float)
    if block.size != cfg.block_len:
        raise ValueError(f"block has {block.size} samples, expected {cfg.block_len}")
    ref_sin, ref_cos = _reference(f0, cfg.fs, cfg.block_len)
    i_sum = float(np.dot(block, ref_sin))
    q_sum = float(np.dot(block, ref_cos))
    n = cfg.block_len
    amp = 2.0 * math.hypot(i_sum, q_sum) / n
    resid = float(np.dot(block, block)) / n - amp * amp / 2.0
    snr = 10 * math.log10(amp * amp / 2.0 / resid) if resid > 0 else math.inf
    if amp == 0.0 or snr < cfg.min_snr_db:
        raise MeasurementInvalid(f"block SNR {snr:.1f} dB below the {cfg.min_snr_db} dB floor")
    period = 1.0 / f0
    raw = -math.atan2(q_sum, i_sum) / (2 * math.pi * f0)
    unwrap = prev_unwrap
    if prev_te is not None:
        unwrap = int(round((prev_te - raw) / period))
    return raw + unwrap * period, unwrap


def block_snr_db(block: np.ndarray, clean: np.ndarray) -> float:
    """SNR of ``block`` against the known noiseless waveform ``clean``."""
    noise = block - clean
    return 10 * math.log10(np.mean(clean**2) / np.mean(noise**2))


def pps_edge_waveform(t: np.ndarray, edge_time: float, rise_time: float) -> np.ndarray:
    """Raised-cosine rising edge from 0 to 1 whose midpoint is at ``edge_time``."""
    u = np.clip((t - edge_time) / rise_time + 0.5, 0.0, 1.0)
    return 0.5 * (1.0 - np.cos(np.pi * u))


def synth_pps_block(edge_time: float, cfg: CaptureConfig, rng: np.random.Generator | None = None,
                    half_width: float = 2e-6) -> tuple[np.ndarray, float]:
    """Samples around a PPS edge; returns ``(samples, block_start_time)``."""
    tick = 1.0 / cfg.fs
    start = math.floor((edge_time - half_width) / tick) * tick
    n = int(round(2 * half_width / tick)) + 1
    t = start + np.arange(n) * tick
    s = pps_edge_waveform(t, edge_time, cfg.pps_rise_time)
    sigma = noise_sigma(cfg.pps_snr_db)
    if sigma:
        if rng is None:
            raise ValueError("a noisy block needs a random generator")
        s = s + rng.standard_normal(n) * sigma
    return s, start


def pps_edge_time(samples, cfg: CaptureConfig, block_start_time: float) -> float:
    """Threshold-crossing time of the single rising edge in ``samples``."""
    s = np.asarray(samples, dtype=float)
    theta = cfg.pps_threshold
    below = s[:-1] < theta
    crossings = np.flatnonzero(below & (s[1:] >= theta))
    if crossings.size != 1:
        raise EdgeDetectionError(int(crossings.size))
    k = int(crossings[0])
    if s[k + 1] == theta:
        k, frac = k + 1, 0.0
    else:
        frac = (theta - s[k]) / (s[k + 1] - s[k])
    return block_start_time + (k + frac) / cfg.fs


def pair_time_error(a: TimeErrorSeries, b: TimeErrorSeries, label: str | None = None) -> TimeErrorSeries:
    """Time error of ``a`` relative to ``b``."""
    if a.tau0 != b.tau0 or a.t0 != b.t0 or len(a) != len(b):
        raise AlignmentError(f"series not aligned: ({a.t0}, {a.tau0}, {len(a)}) vs ({b.t0}, {b.tau0}, {len(b)})")
    kind = a.kind if a.kind == b.kind else None
    if label is None:
        label = f"{a.label}-{b.label}" + (f" {kind}" if kind else "")
    return TimeErrorSeries(a.t0, a.tau0, a.samples - b.samples, label, kind)


@dataclass
class ChainReport:
    snr_db: float | None
    duration: float
    rms_10mhz: float
    max_10mhz: float
    unwrap_events: int
    invalid_blocks: int
    pps_rms: float | None
    pps_edge_errors: int
    agreement_rms: float | None
    rms_limit: float
    passed: bool

    def to_dict(self) -> dict:
        """JSON-ready form; errors that could not be measured become None."""
        def finite(v):
            return v if v is None or math.isfinite(v) else None
        return {
            "snr_db": self.snr_db, "duration_s": self.duration,
            "rms_10mhz_s": finite(self.rms_10mhz), "max_abs_error_10mhz_s": finite(self.max_10mhz),
            "unwrap_events": self.unwrap_events, "invalid_blocks": self.invalid_blocks,
            "pps_rms_s": self.pps_rms, "pps_edge_errors": self.pps_edge_errors,
            "pps_vs_10mhz_rms_s": self.agreement_rms, "rms_limit_s": self.rms_limit,
            "result": "PASS" if self.passed else "FAIL",
        }


def default_injection(amplitude: float = 40e-9, freq: float = 0.5, ramp: float = 0.0):
    """Smooth test trajectory: offset sine plus optional ramp (s/s)."""
    def x_te(t):
        return amplitude * np.sin(2 * np.pi * freq * t + 0.3) + ramp * t
    return x_te


def validate_chain(cfg: CaptureConfig = CaptureConfig(), duration: float = 10.0, f0: float = 10e6,
                   x_te=None, seed: int = 0, rms_limit: float = 100e-12) -> ChainReport:
    """Synthesize ``duration`` seconds of 10 MHz signal, re-measure it, compare.

    Every block of the record is synthesized and estimated.  Within a block the
    injected trajectory is the quadratic through ``x_te`` at the block start,
    centre and end, which is also the truth the estimate is scored against.
    One PPS edge per
    second is measured as well, and compared with the 10 MHz estimate
    decimated to one value per second.
    """
    cfg.check_f0(f0)
    if x_te is None:
        x_te = default_injection()
    rng = np.random.default_rng(seed)
    block_dur = cfg.block_len / cfg.fs
    n_blocks = int(round(duration / block_dur))
    per_second = int(round(1.0 / block_dur))
    sample_t = _sample_times(cfg.fs, cfg.block_len)
    u = sample_t * (2.0 / block_dur) - 1.0
    errs = np.empty(n_blocks)
    est = np.full(n_blocks, np.nan)
    invalid = 0
    unwrap, prev, unwrap_events = 0, None, 0
    for b in range(n_blocks):
        t0 = b * block_dur
        # quadratic through the block start, centre and end; x_te is smooth on this scale
        x0, x1, x2 = x_te(np.array([t0, t0 + 0.5 * block_dur, t0 + block_dur]))
        truth = x1 + u * (0.5 * (x2 - x0) + u * (0.5 * (x2 + x0) - x1))
        block = synth_sine_block(truth, f0, cfg, rng, t_start=t0)
        try:
            te, new_unwrap = estimate_te_10mhz(block, f0, cfg, unwrap, prev)
        except MeasurementInvalid:
            invalid += 1
            errs[b] = np.nan
            continue
        unwrap_events += int(new_unwrap != unwrap)
        unwrap, prev = new_unwrap, te
        est[b] = te
        errs[b] = te - float(np.mean(truth))
    valid = errs[~np.isnan(errs)]
    rms = float(np.sqrt(np.mean(valid**2))) if valid.size else math.inf
    max_err = float(np.max(np.abs(valid))) if valid.size else math.inf

    pps_errs, agree, edge_errors = [], [], 0
    for k in range(int(duration)):
        truth = float(x_te(np.array([float(k)]))[0])
        samples, start = synth_pps_block(k + truth, cfg, rng)
        try:
            t_edge = pps_edge_time(samples, cfg, start)
        except EdgeDetectionError:
            edge_errors += 1
            continue
        pps_te = t_edge - k
        pps_errs.append(pps_te - truth)
        # first block of second k spans [k, k + block_dur); its estimate refers to the block mean
        first = k * per_second
        if first < n_blocks and not np.isnan(est[first]):
            drift = float(np.mean(x_te(k + sample_t))) - truth
            agree.append(pps_te - (est[first] - drift))
    pps_rms = float(np.sqrt(np.mean(np.square(pps_errs)))) if pps_errs else None
    agreement = float(np.sqrt(np.mean(np.square(agree)))) if agree else None
    passed = invalid == 0 and edge_errors == 0 and rms < rms_limit
    return ChainReport(cfg.snr_db, duration, rms, max_err, unwrap_events, invalid,
                       pps_rms, edge_errors, agreement, rms_limit, passed)


def measure_series_waveform(x: np.ndarray, kind: str, f0: float, cfg: CaptureConfig,
                            rng: np.random.Generator) -> np.ndarray:
    """Re-measure a per-second time-error trajectory through the sample-level chain."""
    out = np.empty(x.size)
    if kind == TENMHZ:
        cfg.check_f0(f0)
        unwrap, prev = 0, None
        for k, xv in enumerate(x):
            block = synth_sine_block(xv, f0, cfg, rng)
            te, unwrap = estimate_te_10mhz(block, f0, cfg, unwrap, prev if prev is not None else float(xv))
            out[k] = prev = te
    elif kind == PPS:
        for k, xv in enumerate(x):
            samples, start = synth_pps_block(float(xv), cfg, rng)
            out[k] = pps_edge_time(samples, cfg, start)
    else:
        raise ValueError(f"unknown signal kind {kind!r}")
    return out
