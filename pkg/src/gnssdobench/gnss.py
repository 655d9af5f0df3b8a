"""GNSS-derived timing reference seen by each disciplined oscillator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RandomStream, split_stream

# jitter draws are generated in fixed chunks so epoch k is addressable on its own
JITTER_CHUNK = 4096


@dataclass(frozen=True)
class GnssTimeline:
    """Fix availability and receiver PPS jitter over a scenario.

    ``outages`` holds ``(start, duration)`` pairs in seconds. ``quality`` is a
    piecewise-constant ``(t, satellites_in_view)`` trace kept for display only.
    """

    outages: tuple[tuple[float, float], ...] = ()
    fix_acquire_delay: float = 0.0
    rx_jitter_sigma: float = 0.0
    quality: tuple[tuple[float, int], ...] = ()

    def __post_init__(self):
        outages = tuple((float(s), float(d)) for s, d in self.outages)
        object.__setattr__(self, "outages", outages)
        object.__setattr__(self, "quality", tuple((float(t), int(c)) for t, c in self.quality))
        if self.rx_jitter_sigma < 0:
            raise ValueError("rx_jitter_sigma must be >= 0")
        if self.fix_acquire_delay < 0:
            raise ValueError("fix_acquire_delay must be >= 0")
        prev_end = -np.inf
        for start, dur in outages:
            if dur <= 0 or start < 0:
                raise ValueError(f"outage ({start}, {dur}) must have start >= 0 and duration > 0")
            if start < prev_end:
                raise ValueError("outages must be sorted and non-overlapping")
            prev_end = start + dur

    def with_outages(self, extra) -> GnssTimeline:
        """Timeline with additional outages merged in (overlaps are coalesced)."""
        spans = sorted(list(self.outages) + [(float(s), float(d)) for s, d in extra])
        merged: list[list[float]] = []
        for s, d in spans:
            if merged and s <= merged[-1][0] + merged[-1][1]:
                end = max(merged[-1][0] + merged[-1][1], s + d)
                merged[-1][1] = end - merged[-1][0]
            else:
                merged.append([s, d])
        return GnssTimeline(tuple(map(tuple, merged)), self.fix_acquire_delay,
                            self.rx_jitter_sigma, self.quality)

    def satellites(self, t: float) -> int:
        count = 0
        for start, n in self.quality:
            if start <= t:
                count = n
        return count if fix_available(self, t) else 0


def fix_available(timeline: GnssTimeline, t: float) -> bool:
    if t < 0:
        raise ValueError("t must be >= 0")
    if t < timeline.fix_acquire_delay:
        return False
    return not any(start <= t < start + dur for start, dur in timeline.outages)


def fix_mask(timeline: GnssTimeline, n: int) -> np.ndarray:
    """Availability at epochs ``0 .. n-1`` as a boolean array."""
    t = np.arange(n, dtype=float)
    ok = t >= timeline.fix_acquire_delay
    for start, dur in timeline.outages:
        ok &= ~((t >= start) & (t < start + dur))
    return ok


def _jitter_chunk(rng: RandomStream, chunk: int, sigma: float) -> np.ndarray:
    return split_stream(rng, chunk).generator().standard_normal(JITTER_CHUNK) * sigma


def reference_pps(timeline: GnssTimeline, second_index: int, rng: RandomStream) -> float | None:
    """Timestamp of the receiver's PPS for epoch ``second_index``, or None without fix."""
    if second_index < 0:
        raise ValueError("second_index must be >= 0")
    if not fix_available(timeline, float(second_index)):
        return None
    if timeline.rx_jitter_sigma == 0.0:
        return float(second_index)
    chunk, pos = divmod(second_index, JITTER_CHUNK)
    return second_index + float(_jitter_chunk(rng, chunk, timeline.rx_jitter_sigma)[pos])


def reference_pps_series(timeline: GnssTimeline, n: int, rng: RandomStream) -> np.ndarray:
    """Vector form of :func:`reference_pps` for epochs ``0 .. n-1``; NaN marks absent epochs."""
    sigma = timeline.rx_jitter_sigma
    t = np.arange(n, dtype=float)
    if sigma > 0.0:
        n_chunks = -(-n // JITTER_CHUNK)
        jitter = np.concatenate([_jitter_chunk(rng, c, sigma) for c in range(n_chunks)])[:n]
        t = t + jitter
    return np.where(fix_mask(timeline, n), t, np.nan)
