"""Device archetypes: oscillator and disciplining parameters of one GNSSDO model.

Shipped archetypes live next to this module as JSON files and are produced by
``gnssdobench calibrate``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

from ..discipline import DisciplineParams
from ..noise import AgingModel, NoiseModel, WarmupModel
from ..oscillator import OscillatorParams

BUILTIN = ("model-F", "model-L")


@dataclass(frozen=True)
class Archetype:
    name: str
    oscillator: OscillatorParams = field(default_factory=OscillatorParams)
    discipline: DisciplineParams = field(default_factory=DisciplineParams)
    description: str = ""


def _warmup(data):
    return None if data is None else WarmupModel(**data)


def archetype_from_dict(data: dict) -> Archetype:
    osc = dict(data.get("oscillator", {}))
    osc["noise"] = NoiseModel(**osc.get("noise", {}))
    osc["aging"] = AgingModel(**osc.get("aging", {}))
    for key in ("warmup", "post_exposure_settling", "holdover_drift"):
        osc[key] = _warmup(osc.get(key))
    return Archetype(
        name=data["name"],
        oscillator=OscillatorParams(**osc),
        discipline=DisciplineParams(**data.get("discipline", {})),
        description=data.get("description", ""),
    )


def archetype_to_dict(arch: Archetype) -> dict:
    return {"name": arch.name, "description": arch.description,
            "oscillator": asdict(arch.oscillator), "discipline": asdict(arch.discipline)}


def dump_archetype(arch: Archetype) -> str:
    return json.dumps(archetype_to_dict(arch), indent=2, sort_keys=True) + "\n"


@lru_cache(maxsize=None)
def _load_builtin(name: str) -> Archetype:
    text = resources.files(__package__).joinpath("data", f"{name}.json").read_text()
    return archetype_from_dict(json.loads(text))


def load_archetype(ref: str) -> Archetype:
    """Resolve a built-in name (``model-F``) or a path to an archetype JSON file."""
    if ref in BUILTIN:
        return _load_builtin(ref)
    path = Path(ref)
    if path.suffix == ".json" and path.exists():
        return archetype_from_dict(json.loads(path.read_text()))
    raise KeyError(f"unknown archetype {ref!r}; built-ins are {', '.join(BUILTIN)}")
