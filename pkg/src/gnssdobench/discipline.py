"""GNSSDO steering: mode state machine, PI law, PPS re-alignment, holdover.

The PPS divider can be re-aligned by stepping ``pps_offset``; this moves the
PPS output but never the 10 MHz phase, which is why a device recovers its PPS
accuracy after an outage while the 10 MHz output keeps the offset it
accumulated in holdover.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .core import SimulationFault
from .oscillator import OscillatorState


class Mode(enum.IntEnum):
    WARMUP = 0
    ACQUIRING = 1
    LOCKED = 2
    HOLDOVER = 3
    RECOVERY = 4


ALLOWED_TRANSITIONS = frozenset({
    (Mode.WARMUP, Mode.ACQUIRING),
    (Mode.ACQUIRING, Mode.LOCKED),
    (Mode.LOCKED, Mode.HOLDOVER),
    (Mode.HOLDOVER, Mode.RECOVERY),
    (Mode.RECOVERY, Mode.LOCKED),
    (Mode.RECOVERY, Mode.HOLDOVER),
})


@dataclass(frozen=True)
class DisciplineParams:
    kp: float = 2e-4
    ki: float = 2e-6
    slew_max: float = 1e-6
    lock_threshold: float = 100e-9
    lock_count: int = 60
    pps_step_threshold: float = 1e-6
    holdover_window: int = 128

    def __post_init__(self):
        if not (self.kp > 0 and self.ki > 0):
            raise ValueError("kp and ki must be > 0")
        if self.slew_max < self.kp * 1e-6:
            raise ValueError("slew_max must be >= kp * 1 us so the loop can act on microsecond errors")
        if self.lock_count < 1 or self.holdover_window < 1:
            raise ValueError("lock_count and holdover_window must be >= 1")
        if self.lock_threshold <= 0 or self.pps_step_threshold <= 0:
            raise ValueError("thresholds must be > 0")


@dataclass(frozen=True)
class DisciplineState:
    mode: Mode = Mode.WARMUP
    integrator: float = 0.0
    y_hold: float | None = None
    consecutive_good: int = 0
    history: tuple[float, ...] = ()
    t_last: float | None = None

    @classmethod
    def locked(cls, integrator: float = 0.0) -> DisciplineState:
        """State of a unit that has been locked long enough to fill its history."""
        return cls(mode=Mode.LOCKED, integrator=integrator)


def _clamp(y: float, limit: float) -> float:
    return max(-limit, min(limit, y))


def control_epoch(d: DisciplineState, params: DisciplineParams, pps_error: float | None,
                  osc: OscillatorState) -> tuple[DisciplineState, float, float]:
    """Run one 1 PPS control epoch.

    Returns the new state, the fractional-frequency command and the PPS
    divider step (seconds, zero unless re-aligning).
    """
    t = osc.t
    if d.t_last is not None and not t > d.t_last:
        raise SimulationFault(f"control epoch at t={t} does not follow t={d.t_last}")
    mode = d.mode
    present = pps_error is not None and not math.isnan(pps_error)

    if mode == Mode.WARMUP and not present:
        return replace(d, t_last=t), 0.0, 0.0

    if not present:
        if mode in (Mode.LOCKED, Mode.RECOVERY):
            hist = d.history
            y_hold = sum(hist) / len(hist) if hist else osc.y_ctrl
            d = replace(d, mode=Mode.HOLDOVER, y_hold=y_hold, consecutive_good=0)
        if d.mode == Mode.HOLDOVER:
            return replace(d, t_last=t), d.y_hold, 0.0
        # acquiring without a fix: coast on the integral term
        return replace(d, t_last=t), _clamp(-params.ki * d.integrator, params.slew_max), 0.0

    e = float(pps_error)
    pps_step = 0.0
    realign = mode in (Mode.WARMUP, Mode.HOLDOVER)
    if mode == Mode.WARMUP:
        mode = Mode.ACQUIRING
    elif mode == Mode.HOLDOVER:
        mode = Mode.RECOVERY
    if realign and abs(e) > params.pps_step_threshold:
        pps_step = -e
        e = 0.0

    integrator = d.integrator + e
    y_cmd = _clamp(-(params.kp * e + params.ki * integrator), params.slew_max)
    good = d.consecutive_good + 1 if abs(e) < params.lock_threshold else 0
    y_hold = d.y_hold if mode == Mode.RECOVERY else None
    history = d.history
    if mode in (Mode.ACQUIRING, Mode.RECOVERY) and good >= params.lock_count:
        mode = Mode.LOCKED
        y_hold = None
    if mode == Mode.LOCKED:
        history = (history + (y_cmd,))[-params.holdover_window:]
    new = DisciplineState(mode, integrator, y_hold, good, history, t)
    return new, y_cmd, pps_step


def pps_output_error(osc: OscillatorState, true_second: float | None = None) -> float:
    """Time error of the PPS output: the 10 MHz phase plus divider offset."""
    return osc.x_out + osc.pps_offset


def tenmhz_output_error(osc: OscillatorState) -> float:
    return osc.x_out
