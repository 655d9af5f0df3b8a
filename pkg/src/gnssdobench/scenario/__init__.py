from .archetypes import Archetype, load_archetype
from .engine import RunResult, run, usability_index, usability_time
from .spec import DutSpec, ScenarioSpec, SpecError, ThrustSequence, parse, serialize, spec_hash
from .templates import TEMPLATES, template

__all__ = [
    "Archetype", "DutSpec", "RunResult", "ScenarioSpec", "SpecError", "TEMPLATES", "ThrustSequence",
    "load_archetype", "parse", "run", "serialize", "spec_hash", "template", "usability_index",
    "usability_time",
]
