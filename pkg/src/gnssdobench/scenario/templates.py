"""Ready-made scenarios mirroring the five laboratory experiments.

Every template uses four devices: two of model-L (#01, #02) and two of
model-F (#03, #04).  Devices #01 and #03 are exposed to the experiment's
disturbance, #02 and #04 run undisturbed, and the pairs are (#01, #02) and
(#03, #04).
"""

from __future__ import annotations

from dataclasses import replace

from ..gnss import GnssTimeline
from ..oscillator import HalfSineShock, SineSweep, VibrationProfile
from .spec import DutSpec, ScenarioSpec, SpecError, ThrustSequence, validate

TEMPLATES = ("steady_state", "cold_start", "holdover_24h", "shaker_4x10min", "mockup_30min")

# GNSS receiver PPS jitter shared by all templates (s)
RX_JITTER = 15e-9
# mock-up EMI coupling gain per placement; B sits next to the rotors
PLACEMENT_GAINS = {"A": 1.0, "B": 4.0}

HOLDOVER_LEAD = 2 * 3600.0
HOLDOVER_OUTAGE = 24 * 3600.0
HOLDOVER_TAIL = 6 * 3600.0

SHAKER_LEAD = 1200.0
SHAKER_SEQUENCES = 4
SHAKER_SEQUENCE_LEN = 150.0
SHAKER_TAIL = 3600.0

MOCKUP_LEAD = 1200.0
MOCKUP_FLIGHT = 1800.0
MOCKUP_TAIL = 2400.0

_OVERRIDES = {"duration", "seed", "placement", "archetypes", "rx_jitter_sigma", "outage_start", "outage_duration"}


def _duts(exposed: dict, archetypes=("model-L", "model-L", "model-F", "model-F")) -> tuple[DutSpec, ...]:
    out = []
    for i, arch in enumerate(archetypes):
        kw = exposed if i % 2 == 0 else {}
        out.append(DutSpec(archetype=arch, label=f"dut{i + 1:02d}", **kw))
    return tuple(out)


def shaker_profile(start: float) -> VibrationProfile:
    """Four repetitions of a sine sweep followed by three half-sine shocks.

    Default levels (10-500 Hz at 2 g, 30 g / 11 ms shocks) are placeholders for
    the payload-standard tables, which are not reproduced here.
    """
    segs = []
    for r in range(SHAKER_SEQUENCES):
        t = start + r * SHAKER_SEQUENCE_LEN
        segs.append(SineSweep(t, 100.0, 2.0, 10.0, 500.0))
        for s in range(3):
            segs.append(HalfSineShock(t + 110.0 + 2.0 * s, 0.011, 30.0))
    return VibrationProfile(tuple(segs))


def template(name: str, overrides: dict | None = None) -> ScenarioSpec:
    """Build the named template, then apply ``overrides``.

    Recognized overrides: ``duration``, ``seed``, ``placement`` ("A", "B" or a
    gain), ``archetypes`` (four archetype references), ``rx_jitter_sigma``,
    ``outage_start`` and ``outage_duration`` (holdover template only).
    """
    overrides = dict(overrides or {})
    unknown = set(overrides) - _OVERRIDES
    if unknown:
        raise SpecError([(f"overrides.{k}", "unknown override") for k in sorted(unknown)])
    if name not in TEMPLATES:
        raise SpecError([("template", f"unknown template {name!r}; choose from {', '.join(TEMPLATES)}")])
    seed = int(overrides.get("seed", 1))
    gnss = GnssTimeline(rx_jitter_sigma=float(overrides.get("rx_jitter_sigma", RX_JITTER)),
                        quality=((0.0, 12),))
    pairs = ((0, 1), (2, 3))
    vibration = VibrationProfile()
    thrust = None

    if name == "steady_state":
        duration = 4 * 3600.0
        duts = _duts({})
    elif name == "cold_start":
        duration = 3 * 3600.0
        gnss = replace(gnss, fix_acquire_delay=60.0)
        duts = _duts({"cold_start": True})
    elif name == "holdover_24h":
        start = float(overrides.get("outage_start", HOLDOVER_LEAD))
        length = float(overrides.get("outage_duration", HOLDOVER_OUTAGE))
        duration = start + length + HOLDOVER_TAIL
        duts = _duts({"gnss_outages": ((start, length),)})
    elif name == "shaker_4x10min":
        duration = SHAKER_LEAD + SHAKER_SEQUENCES * SHAKER_SEQUENCE_LEN + SHAKER_TAIL
        vibration = shaker_profile(SHAKER_LEAD)
        duts = _duts({"shaker": True})
    else:
        duration = MOCKUP_LEAD + MOCKUP_FLIGHT + MOCKUP_TAIL
        placement = overrides.get("placement", "B")
        gain = PLACEMENT_GAINS.get(placement) if isinstance(placement, str) else float(placement)
        if gain is None:
            raise SpecError([("overrides.placement", f"unknown placement {placement!r}")])
        thrust = ThrustSequence(start=MOCKUP_LEAD, duration=MOCKUP_FLIGHT)
        duts = _duts({"placement_gain": gain})

    if "archetypes" in overrides:
        archs = list(overrides["archetypes"])
        if len(archs) != len(duts):
            raise SpecError([("overrides.archetypes", f"expected {len(duts)} entries")])
        duts = tuple(replace(d, archetype=a) for d, a in zip(duts, archs))
    duration = float(overrides.get("duration", duration))
    spec = ScenarioSpec(duration=duration, seed=seed, duts=duts, gnss=gnss, vibration=vibration,
                        thrust=thrust, pairs=pairs, name=name)
    return validate(spec)
