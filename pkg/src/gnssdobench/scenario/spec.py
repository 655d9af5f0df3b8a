"""Declarative scenario description and its config-file form.

The config file is JSON with a ``schema_version`` field.  Every field has a
default, so a file only needs what differs from it.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace

from ..gnss import GnssTimeline
from ..oscillator import HalfSineShock, SineSweep, VibrationProfile
from ..sdr import CaptureConfig

SCHEMA_VERSION = 1


class SpecError(ValueError):
    """Invalid scenario; ``problems`` lists ``(path, message)`` pairs."""

    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = problems
        super().__init__("; ".join(f"{p}: {m}" for p, m in problems))


@dataclass(frozen=True)
class ThrustSequence:
    """Alternating ESC pulse widths on the quadcopter mock-up.

    ``period`` is the time between pulse-width changes; ``kappa`` is the EMI
    activity level held for one second after each change.
    """

    start: float = 0.0
    duration: float = 1800.0
    period: float = 20.0
    pw_low: float = 1500.0
    pw_high: float = 1600.0
    kappa: float = 3.0

    @property
    def end(self) -> float:
        return self.start + self.duration

    def pulse_width(self, t: float) -> float:
        """Commanded pulse width in microseconds; 1100 us (0 %) when inactive."""
        if not self.start <= t < self.end:
            return 1100.0
        return self.pw_low if int((t - self.start) // self.period) % 2 == 0 else self.pw_high

    def activity(self, t: float) -> float:
        if not self.start <= t < self.end:
            return 0.0
        u = t - self.start
        if u >= self.period and (u % self.period) < 1.0:
            return self.kappa
        return 1.0


@dataclass(frozen=True)
class DutSpec:
    """One device under test.

    ``placement_gain`` scales EMI coupling from the mock-up (0 = not on the
    mock-up); ``shaker`` mounts the device on the vibration table.
    """

    archetype: str
    placement_gain: float = 0.0
    cold_start: bool = False
    shaker: bool = False
    gnss_outages: tuple[tuple[float, float], ...] = ()
    settling: bool = True
    label: str = ""


@dataclass(frozen=True)
class ScenarioSpec:
    duration: float
    seed: int
    duts: tuple[DutSpec, ...]
    gnss: GnssTimeline = field(default_factory=GnssTimeline)
    vibration: VibrationProfile = field(default_factory=VibrationProfile)
    thrust: ThrustSequence | None = None
    capture: CaptureConfig = field(default_factory=CaptureConfig)
    pairs: tuple[tuple[int, int], ...] = ()
    name: str = "custom"
    schema_version: int = SCHEMA_VERSION

    @property
    def n_ticks(self) -> int:
        return int(self.duration)

    def dut_label(self, i: int) -> str:
        return self.duts[i].label or f"dut{i + 1:02d}"


def validate(spec: ScenarioSpec) -> ScenarioSpec:
    """Raise :class:`SpecError` listing every problem found."""
    problems: list[tuple[str, str]] = []
    if spec.schema_version != SCHEMA_VERSION:
        problems.append(("schema_version", f"unsupported version {spec.schema_version}"))
    if not (isinstance(spec.duration, (int, float)) and math.isfinite(spec.duration)) or spec.duration < 60:
        problems.append(("duration", "must be >= 60 s"))
    elif spec.duration != int(spec.duration):
        problems.append(("duration", "must be a whole number of seconds"))
    if not isinstance(spec.seed, int) or not 0 <= spec.seed < 2**64:
        problems.append(("seed", "must be an integer in [0, 2**64)"))
    if not spec.duts:
        problems.append(("duts", "at least one device is required"))
    for i, d in enumerate(spec.duts):
        if not d.archetype:
            problems.append((f"duts[{i}].archetype", "missing"))
        if d.placement_gain < 0:
            problems.append((f"duts[{i}].placement_gain", "must be >= 0"))
        for j, (s, dur) in enumerate(d.gnss_outages):
            if s < 0 or dur <= 0:
                problems.append((f"duts[{i}].gnss_outages[{j}]", "start must be >= 0 and duration > 0"))
    if spec.pairs and len(spec.duts) < 2:
        problems.append(("pairs", "pairs need at least two devices"))
    for j, pair in enumerate(spec.pairs):
        if len(pair) != 2 or any(not 0 <= p < len(spec.duts) for p in pair) or pair[0] == pair[1]:
            problems.append((f"pairs[{j}]", f"invalid device indices {pair}"))
    if spec.thrust is not None:
        t = spec.thrust
        for name in ("pw_low", "pw_high"):
            if not 1100 <= getattr(t, name) <= 2000:
                problems.append((f"thrust.{name}", "must be within 1100..2000 us"))
        if t.period <= 0 or t.duration <= 0:
            problems.append(("thrust", "period and duration must be > 0"))
    if problems:
        raise SpecError(problems)
    return spec


# ---------------------------------------------------------------- serialization

def _segment_to_dict(seg) -> dict:
    kind = "sine_sweep" if isinstance(seg, SineSweep) else "half_sine_shock"
    return {"type": kind, **asdict(seg)}


def to_dict(spec: ScenarioSpec) -> dict:
    return {
        "schema_version": spec.schema_version,
        "name": spec.name,
        "duration": spec.duration,
        "seed": spec.seed,
        "duts": [{**asdict(d), "gnss_outages": [list(o) for o in d.gnss_outages]} for d in spec.duts],
        "gnss": {
            "outages": [list(o) for o in spec.gnss.outages],
            "fix_acquire_delay": spec.gnss.fix_acquire_delay,
            "rx_jitter_sigma": spec.gnss.rx_jitter_sigma,
            "quality": [list(q) for q in spec.gnss.quality],
        },
        "vibration": [_segment_to_dict(s) for s in spec.vibration.segments],
        "thrust": None if spec.thrust is None else asdict(spec.thrust),
        "capture": asdict(spec.capture),
        "pairs": [list(p) for p in spec.pairs],
    }


def serialize(spec: ScenarioSpec) -> str:
    return json.dumps(to_dict(spec), indent=2, sort_keys=True) + "\n"


def spec_hash(spec: ScenarioSpec) -> str:
    canonical = json.dumps(to_dict(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _build(cls, data, path: str, problems: list, converters: dict | None = None):
    if not isinstance(data, dict):
        problems.append((path, f"expected an object, got {type(data).__name__}"))
        return None
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            problems.append((f"{path}.{key}", "unknown field"))
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            continue
        if converters and key in converters:
            try:
                value = converters[key](value)
            except (TypeError, ValueError) as exc:
                problems.append((f"{path}.{key}", str(exc)))
                continue
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        problems.append((path, str(exc)))
        return None


def _pairs_of_floats(value):
    return tuple((float(a), float(b)) for a, b in value)


def from_dict(data: dict) -> ScenarioSpec:
    problems: list[tuple[str, str]] = []
    if not isinstance(data, dict):
        raise SpecError([("", "scenario must be a JSON object")])
    allowed = {f.name for f in fields(ScenarioSpec)}
    for key in data:
        if key not in allowed:
            problems.append((key, "unknown field"))
    for key in ("duration", "seed", "duts"):
        if key not in data:
            problems.append((key, "required"))
    duts = []
    for i, d in enumerate(data.get("duts") or []):
        dut = _build(DutSpec, d, f"duts[{i}]", problems, {"gnss_outages": _pairs_of_floats})
        if dut is not None:
            duts.append(dut)
    gnss = _build(GnssTimeline, data.get("gnss", {}), "gnss", problems,
                  {"outages": _pairs_of_floats, "quality": lambda v: tuple((float(a), int(b)) for a, b in v)})
    segments = []
    for i, seg in enumerate(data.get("vibration") or []):
        seg = dict(seg) if isinstance(seg, dict) else seg
        kind = seg.pop("type", None) if isinstance(seg, dict) else None
        cls = {"sine_sweep": SineSweep, "half_sine_shock": HalfSineShock}.get(kind)
        if cls is None:
            problems.append((f"vibration[{i}].type", f"unknown segment type {kind!r}"))
            continue
        built = _build(cls, seg, f"vibration[{i}]", problems)
        if built is not None:
            segments.append(built)
    vibration = None
    try:
        vibration = VibrationProfile(tuple(segments))
    except ValueError as exc:
        problems.append(("vibration", str(exc)))
    thrust = None
    if data.get("thrust") is not None:
        thrust = _build(ThrustSequence, data["thrust"], "thrust", problems)
    capture = _build(CaptureConfig, data.get("capture", {}), "capture", problems)
    pairs = ()
    try:
        pairs = tuple((int(a), int(b)) for a, b in data.get("pairs", []))
    except (TypeError, ValueError):
        problems.append(("pairs", "expected a list of [a, b] index pairs"))
    if problems:
        raise SpecError(problems)
    spec = ScenarioSpec(
        duration=data["duration"], seed=data["seed"], duts=tuple(duts), gnss=gnss,
        vibration=vibration, thrust=thrust, capture=capture, pairs=pairs,
        name=data.get("name", "custom"), schema_version=data.get("schema_version", SCHEMA_VERSION),
    )
    return validate(spec)


def parse(text: str) -> ScenarioSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError([(f"line {exc.lineno}", exc.msg)]) from exc
    return from_dict(data)


def strip_disturbances(spec: ScenarioSpec) -> ScenarioSpec:
    """Same scenario without vibration, thrust, outages or cold starts."""
    duts = tuple(replace(d, gnss_outages=(), shaker=False, placement_gain=0.0, cold_start=False)
                 for d in spec.duts)
    gnss = replace(spec.gnss, outages=(), fix_acquire_delay=0.0)
    return replace(spec, duts=duts, gnss=gnss, vibration=VibrationProfile(), thrust=None)
