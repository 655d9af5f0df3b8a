"""Fractional-frequency components of a free-running oscillator.

Power-law noise follows the one-sided convention ``S_y(f) = sum h_a * f**a``
for ``a`` in {2, 1, 0, -1, -2} (white PM, flicker PM, white FM, flicker FM,
random-walk FM).  Each component is white Gaussian noise passed through the
fractional-difference filter ``(1 - z**-1) ** (a / 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .core import RandomStream, split_stream

# longest impulse response used for the fractional filters; longer records see
# a flattened spectrum below 1 / (MAX_FILTER_LEN * tau0)
MAX_FILTER_LEN = 2**20

EXPONENTS = (2, 1, 0, -1, -2)
NOISE_NAMES = {2: "WPM", 1: "FPM", 0: "WFM", -1: "FFM", -2: "RWFM"}


@dataclass(frozen=True)
class NoiseModel:
    """Power-law intensities ``h2 .. hm2`` (``hm1`` is h_-1, ``hm2`` is h_-2)."""

    h2: float = 0.0
    h1: float = 0.0
    h0: float = 0.0
    hm1: float = 0.0
    hm2: float = 0.0

    def __post_init__(self):
        for name, value in self.coefficients().items():
            if value < 0 or not math.isfinite(value):
                raise ValueError(f"noise coefficient for alpha={name} must be finite and >= 0")

    def coefficients(self) -> dict[int, float]:
        return {2: self.h2, 1: self.h1, 0: self.h0, -1: self.hm1, -2: self.hm2}

    def only(self, alpha: int) -> NoiseModel:
        """Copy keeping only the component with exponent ``alpha``."""
        keep = {f"h{'m' if a < 0 else ''}{abs(a)}": (v if a == alpha else 0.0)
                for a, v in self.coefficients().items()}
        return NoiseModel(**keep)

    def is_zero(self) -> bool:
        return not any(self.coefficients().values())


def kasdin_walter_filter(alpha: float, n: int) -> np.ndarray:
    """Impulse response of ``(1 - z**-1) ** (alpha / 2)``, truncated to ``n`` taps."""
    beta = -alpha
    h = np.empty(n)
    h[0] = 1.0
    for k in range(1, n):
        h[k] = h[k - 1] * (0.5 * beta + k - 1) / k
    return h


def white_sigma(alpha: int, h: float, tau0: float) -> float:
    """Std-dev of the driving white noise that yields ``S_y = h * f**alpha``."""
    return math.sqrt(h / (2.0 * tau0 * (2.0 * math.pi * tau0) ** alpha))


def gen_powerlaw_y(model: NoiseModel, n: int, tau0: float, rng: RandomStream) -> np.ndarray:
    """``n`` fractional-frequency samples with the model's power-law spectrum.

    Each component draws from its own child stream of ``rng`` so enabling one
    component never changes the realisation of another.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    y = np.zeros(n)
    for idx, alpha in enumerate(EXPONENTS):
        h = model.coefficients()[alpha]
        if h == 0.0:
            continue
        gen = split_stream(rng, idx).generator()
        w = gen.standard_normal(n) * white_sigma(alpha, h, tau0)
        if alpha == 0:
            y += w
        elif alpha == 2:
            y += np.diff(w, prepend=0.0)
        elif alpha == -2:
            y += np.cumsum(w)
        else:
            taps = kasdin_walter_filter(alpha, min(n, MAX_FILTER_LEN))
            y += fftconvolve(w, taps)[:n]
    return y


def adev_theory(model: NoiseModel, tau: float, tau0: float) -> float:
    """Textbook Allan deviation of the model, bandwidth ``fh = 1 / (2 tau0)``."""
    fh = 0.5 / tau0
    c = model.coefficients()
    var = (3.0 * fh * c[2] / (4 * math.pi**2 * tau**2)
           + (1.038 + 3.0 * math.log(2 * math.pi * fh * tau)) * c[1] / (4 * math.pi**2 * tau**2)
           + c[0] / (2.0 * tau)
           + 2.0 * math.log(2.0) * c[-1]
           + (2 * math.pi) ** 2 * tau * c[-2] / 6.0)
    return math.sqrt(var)


@dataclass(frozen=True)
class WarmupModel:
    """Exponential frequency settling ``A * exp(-t / tau)``.

    A second exponential term (``amplitude2``, ``tau2``) and a constant
    ``offset`` are available but off by default.
    """

    amplitude: float = 0.0
    tau: float = 600.0
    amplitude2: float = 0.0
    tau2: float = 600.0
    offset: float = 0.0

    def __post_init__(self):
        if not (self.tau > 0 and self.tau2 > 0):
            raise ValueError("warm-up time constants must be > 0")

    def is_zero(self) -> bool:
        return self.amplitude == 0.0 and self.amplitude2 == 0.0 and self.offset == 0.0

    def phase(self, t):
        """Accumulated time error ``integral_0^t y_w`` in seconds."""
        t = np.asarray(t, dtype=float)
        return (self.amplitude * self.tau * -np.expm1(-t / self.tau)
                + self.amplitude2 * self.tau2 * -np.expm1(-t / self.tau2)
                + self.offset * t)


def warmup_y(model: WarmupModel, t):
    if isinstance(t, float):
        if t < 0:
            raise ValueError("t must be >= 0")
        y = model.offset + model.amplitude * math.exp(-t / model.tau)
        if model.amplitude2:
            y += model.amplitude2 * math.exp(-t / model.tau2)
        return y
    t_arr = np.asarray(t, dtype=float)
    if (t_arr < 0).any():
        raise ValueError("t must be >= 0")
    y = model.offset + model.amplitude * np.exp(-t_arr / model.tau)
    if model.amplitude2:
        y = y + model.amplitude2 * np.exp(-t_arr / model.tau2)
    return float(y) if y.ndim == 0 else y


@dataclass(frozen=True)
class AgingModel:
    """Linear frequency aging, ``rate`` in fractional frequency per second."""

    rate: float = 0.0

    def __post_init__(self):
        if abs(self.rate) > 1e-9:
            raise ValueError(f"aging rate {self.rate}/s exceeds the 1e-9/s sanity bound")


def aging_y(model: AgingModel, t):
    t_arr = np.asarray(t, dtype=float)
    if (t_arr < 0).any():
        raise ValueError("t must be >= 0")
    y = model.rate * t_arr
    return float(y) if y.ndim == 0 else y
