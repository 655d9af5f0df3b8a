"""Shared value types: time-error series, random streams, simulation faults."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PPS = "PPS"
TENMHZ = "TENMHZ"
SIGNAL_KINDS = (PPS, TENMHZ)

# sanity bound on any fractional-frequency value produced by a simulation step
Y_SANITY = 1e-3


class SimulationFault(RuntimeError):
    """A simulated quantity left its physical sanity bounds."""


class SeriesTooShort(ValueError):
    """The series does not hold enough samples for the requested interval."""


@dataclass(frozen=True)
class RandomStream:
    """Addressable source of random numbers.

    A stream is identified by ``(seed, stream_id, path)``; the same triple
    yields the same draws on every platform.  ``path`` records the child
    indices taken by :func:`split_stream`.
    """

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")
        if self.stream_id < 0:
            raise ValueError("stream_id must be >= 0")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id), *self.path))
        return np.random.Generator(np.random.PCG64(ss))


def split_stream(parent: RandomStream, child_index: int) -> RandomStream:
    """Derive an independent child stream, deterministic in ``(parent, child_index)``."""
    if child_index < 0:
        raise ValueError("child_index must be >= 0")
    return RandomStream(parent.seed, parent.stream_id, parent.path + (int(child_index),))


@dataclass(frozen=True, eq=False)
class TimeErrorSeries:
    """Uniformly sampled time error ``x(t)`` in seconds.

    Sample ``i`` belongs to time ``t0 + i * tau0``.  Missing samples (NaN) are
    only accepted for PPS series.
    """

    t0: float
    tau0: float
    samples: np.ndarray
    label: str = ""
    kind: str | None = None

    def __post_init__(self):
        if not self.tau0 > 0:
            raise ValueError(f"tau0 must be > 0, got {self.tau0}")
        if self.kind is not None and self.kind not in SIGNAL_KINDS:
            raise ValueError(f"kind must be one of {SIGNAL_KINDS}, got {self.kind!r}")
        arr = np.array(self.samples, dtype=float, copy=True).reshape(-1)
        if np.isinf(arr).any():
            raise ValueError("time-error samples must be finite")
        if np.isnan(arr).any() and self.kind != PPS:
            raise ValueError("missing samples are only allowed in PPS series")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    def __len__(self):
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) * self.tau0

    @property
    def has_missing(self) -> bool:
        return bool(np.isnan(self.samples).any())

    def with_samples(self, samples, label: str | None = None) -> TimeErrorSeries:
        return TimeErrorSeries(self.t0, self.tau0, samples,
                               self.label if label is None else label, self.kind)

    def slice(self, start: int, stop: int | None = None) -> TimeErrorSeries:
        """Sub-series of samples ``[start, stop)`` with ``t0`` shifted accordingly."""
        n = len(self)
        start = max(0, start)
        stop = n if stop is None else min(n, stop)
        return TimeErrorSeries(self.t0 + start * self.tau0, self.tau0,
                               self.samples[start:stop], self.label, self.kind)

    def equals(self, other: TimeErrorSeries) -> bool:
        return (self.t0 == other.t0 and self.tau0 == other.tau0
                and self.label == other.label and self.kind == other.kind
                and np.array_equal(self.samples, other.samples, equal_nan=True))


def integer_ratio(numerator: float, denominator: float, what: str = "ratio") -> int:
    ratio = numerator / denominator
    m = int(round(ratio))
    if m < 1 or abs(ratio - m) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"{what} {numerator}/{denominator} is not a positive integer multiple")
    return m


def resample_to(series: TimeErrorSeries, new_tau0: float) -> TimeErrorSeries:
    """Decimate by averaging over consecutive blocks of ``new_tau0``.

    The trailing partial block is dropped.
    """
    if new_tau0 < series.tau0:
        raise ValueError("new_tau0 must be >= tau0")
    k = integer_ratio(new_tau0, series.tau0, "new_tau0/tau0")
    if k == 1:
        return series
    n_out = len(series) // k
    blocks = series.samples[: n_out * k].reshape(n_out, k)
    return TimeErrorSeries(series.t0, series.tau0 * k, blocks.mean(axis=1), series.label, series.kind)

