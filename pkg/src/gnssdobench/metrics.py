"""Time-domain stability metrics over time-error series.

All interval arguments ``m`` are in samples, so the observation interval is
``tau = m * tau0``.  An MTIE window of interval ``tau`` spans ``m + 1``
samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from .core import SeriesTooShort, TimeErrorSeries, integer_ratio

ADEV = "ADEV"
TIERMS = "TIERMS"
MTIE = "MTIE"

# tau points with fewer second differences than this are flagged
LOW_CONFIDENCE_TERMS = 4
MAD_NORMALIZATION = 1.4826


def _as_array(series) -> tuple[np.ndarray, float]:
    if isinstance(series, TimeErrorSeries):
        x, tau0 = series.samples, series.tau0
    else:
        x, tau0 = np.asarray(series, dtype=float), 1.0
    if np.isnan(x).any():
        raise ValueError("metrics need a gap-free series; missing samples present")
    return x, tau0


def _check_m(m: int, n: int, needed: int, what: str):
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if n < needed:
        raise SeriesTooShort(f"{what} with m={m} needs N >= {needed}, got N={n}")


def overlapping_adev(series, m: int) -> float:
    """Overlapping Allan deviation at ``tau = m * tau0`` from phase data."""
    x, tau0 = _as_array(series)
    n = x.size
    _check_m(m, n, 2 * m + 1, "ADEV")
    d2 = x[2 * m:] - 2.0 * x[m:n - m] + x[: n - 2 * m]
    tau = m * tau0
    return float(np.sqrt(np.dot(d2, d2) / (2.0 * (n - 2 * m) * tau * tau)))


def tie_rms(series, m: int) -> float:
    x, _ = _as_array(series)
    _check_m(m, x.size, m + 1, "TIE_rms")
    d = x[m:] - x[:-m]
    return float(np.sqrt(np.mean(d * d)))


def window_ranges(x, width: int) -> np.ndarray:
    """Peak-to-peak value of every window of ``width`` consecutive samples.

    The running max and min come from :mod:`scipy.ndimage`, whose 1-D filters
    use a monotonic-wedge (ascending minima) scan, O(N) overall.  The origin
    shift makes output ``i`` cover ``x[i : i + width]``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if width < 1 or width > n:
        raise ValueError(f"window width {width} invalid for {n} samples")
    origin = -(width // 2)
    hi = maximum_filter1d(x, width, mode="nearest", origin=origin)
    lo = minimum_filter1d(x, width, mode="nearest", origin=origin)
    return (hi - lo)[: n - width + 1]


def mtie(series, m: int) -> float:
    """Maximum time interval error for windows spanning ``m + 1`` samples."""
    x, _ = _as_array(series)
    _check_m(m, x.size, m + 1, "MTIE")
    return float(window_ranges(x, m + 1).max())


def mtie_bruteforce_all(series, m_max: int) -> np.ndarray:
    """Reference MTIE for every ``m = 1 .. m_max`` by direct window enumeration.

    The max and min of each window ``x[i : i + m + 1]`` are grown one sample
    at a time from those of ``x[i : i + m]``, so every window of every width
    is visited explicitly: O(N * m_max) work, no clever data structure.
    """
    x, _ = _as_array(series)
    _check_m(m_max, x.size, m_max + 1, "MTIE")
    hi = x.copy()
    lo = x.copy()
    out = np.empty(m_max)
    for m in range(1, m_max + 1):
        hi = np.maximum(hi[:-1], x[m:])
        lo = np.minimum(lo[:-1], x[m:])
        out[m - 1] = (hi - lo).max()
    return out


def mtie_bruteforce(series, m: int) -> float:
    """Slow reference for :func:`mtie`, see :func:`mtie_bruteforce_all`."""
    return float(mtie_bruteforce_all(series, m)[-1])


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    sigma: float
    max_abs: float
    outlier_count: int
    outlier_threshold: float
    n: int

    def to_dict(self) -> dict:
        return {"mean_s": self.mean, "sigma_s": self.sigma, "max_abs_s": self.max_abs,
                "outlier_count": self.outlier_count,
                "outlier_threshold_s": self.outlier_threshold, "n": self.n}


def summarize(series, k_mad: float = 5.0) -> SummaryStats:
    """Mean, standard deviation and robust outlier count.

    A sample is an outlier when it lies further than ``k_mad`` normalized
    median absolute deviations from the median.
    """
    x, _ = _as_array(series)
    if x.size < 2:
        raise SeriesTooShort("summarize needs at least 2 samples")
    med = np.median(x)
    mad = np.median(np.abs(x - med))
    threshold = k_mad * MAD_NORMALIZATION * mad
    outliers = int(np.count_nonzero(np.abs(x - med) > threshold))
    return SummaryStats(float(x.mean()), float(x.std(ddof=1)), float(np.abs(x).max()),
                        outliers, float(threshold), int(x.size))


@dataclass(frozen=True, eq=False)
class TauGrid:
    """Strictly increasing observation intervals in seconds."""

    taus: np.ndarray

    def __post_init__(self):
        taus = np.array(self.taus, dtype=float).reshape(-1)
        if taus.size == 0:
            raise ValueError("tau grid is empty")
        if (taus <= 0).any() or (np.diff(taus) <= 0).any():
            raise ValueError("tau grid must be positive and strictly increasing")
        object.__setattr__(self, "taus", taus)

    @classmethod
    def octave(cls, tau0: float, n: int, max_m: int | None = None) -> TauGrid:
        """Powers of two up to the longest interval valid for ADEV on ``n`` samples."""
        limit = (n - 1) // 2 if max_m is None else max_m
        ms = [1 << k for k in range(64) if (1 << k) <= limit]
        if not ms:
            raise SeriesTooShort(f"no octave tau fits {n} samples")
        return cls(np.array(ms) * tau0)

    @classmethod
    def decade(cls, tau0: float, n: int, max_m: int | None = None) -> TauGrid:
        """1-2-5 sequence per decade."""
        limit = (n - 1) // 2 if max_m is None else max_m
        ms = []
        k = 1
        while k <= limit:
            for mult in (1, 2, 5):
                if k * mult <= limit:
                    ms.append(k * mult)
            k *= 10
        if not ms:
            raise SeriesTooShort(f"no decade tau fits {n} samples")
        return cls(np.array(ms) * tau0)

    @classmethod
    def parse(cls, text: str) -> TauGrid:
        """Comma-separated seconds, e.g. ``"1,10,100,1800"``."""
        return cls(np.array([float(v) for v in text.split(",") if v.strip()]))

    def multiples(self, tau0: float) -> list[int]:
        return [integer_ratio(t, tau0, "tau/tau0") for t in self.taus]


@dataclass(frozen=True, eq=False)
class StabilityCurve:
    kind: str
    taus: np.ndarray
    values: np.ndarray
    low_confidence: np.ndarray

    def at(self, tau: float) -> float:
        idx = np.flatnonzero(np.isclose(self.taus, tau))
        if idx.size == 0:
            raise KeyError(f"tau={tau} not on curve")
        return float(self.values[idx[0]])


def stability_curves(series: TimeErrorSeries, grid: TauGrid) -> tuple[StabilityCurve, StabilityCurve, StabilityCurve]:
    """ADEV, TIE_rms and MTIE on ``grid``; points too long for a metric are skipped."""
    x, tau0 = _as_array(series)
    n = x.size
    points = {ADEV: [], TIERMS: [], MTIE: []}
    for m in grid.multiples(tau0):
        tau = m * tau0
        if n >= 2 * m + 1:
            points[ADEV].append((tau, overlapping_adev(series, m), n - 2 * m < LOW_CONFIDENCE_TERMS))
        if n >= m + 1:
            points[TIERMS].append((tau, tie_rms(series, m), False))
            points[MTIE].append((tau, mtie(series, m), False))
    if not any(points.values()):
        raise SeriesTooShort(f"no tau point of the grid fits {n} samples")
    curves = []
    for kind in (ADEV, TIERMS, MTIE):
        pts = points[kind]
        curves.append(StabilityCurve(
            kind,
            np.array([p[0] for p in pts], dtype=float),
            np.array([p[1] for p in pts], dtype=float),
            np.array([p[2] for p in pts], dtype=bool),
        ))
    return tuple(curves)
