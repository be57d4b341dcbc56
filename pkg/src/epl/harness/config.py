"""Campaign configuration: a single strict JSON document.

Unknown keys are rejected everywhere.  Every angle block carries an explicit
``angle_convention`` (``bloch``, ``hwp`` or ``polarizer``).
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from ..source import SourceConfig, ideal_config, paper_preset

SCHEMA_VERSION = 1
EXPERIMENTS = ("rates-sweep", "fringe", "tomo", "chsh", "teleport", "table-row")
PAPER_POWERS_MW = [0.2, 0.4, 0.6, 0.8, 1.0, 1.6, 1.8, 3.1, 5.0, 7.0, 10.2, 14.3]


class ConfigError(ValueError):
    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_unit = {"type": "number", "minimum": 0, "maximum": 1}
_convention = {"enum": ["bloch", "hwp", "polarizer"]}
_angle_list = {"type": "array", "items": _num, "minItems": 1}
_range = {
    "type": "object",
    "additionalProperties": False,
    "required": ["start", "stop", "step"],
    "properties": {"start": _num, "stop": _num, "step": _pos},
}


def _block(required, properties):
    return {"type": "object", "additionalProperties": False, "required": required, "properties": properties}


_source_props = {f.name: ({"type": "number"}) for f in dataclasses.fields(SourceConfig)}
_source_props["preset"] = {"enum": ["paper", "ideal"]}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "seed"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "experiment": {"enum": list(EXPERIMENTS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "source": {"type": "object", "additionalProperties": False, "properties": _source_props},
        "output": _block([], {"dir": {"type": "string"}}),
        "rates_sweep": _block(["powers_mw", "duration_s"], {
            "powers_mw": {"type": "array", "items": _nonneg, "minItems": 2},
            "duration_s": _pos,
        }),
        "fringe": _block(["angle_convention", "theta_s", "theta_i", "duration_s"], {
            "angle_convention": _convention,
            "theta_s": _angle_list,
            "theta_i": {"oneOf": [_angle_list, _range]},
            "duration_s": _pos,
        }),
        "tomo": _block(["duration_s"], {
            "n_settings": {"enum": [16, 36]},
            "duration_s": _pos,
            "init": {"enum": ["mixed", "linear"]},
            "target": {"enum": ["Phi+", "Phi-", "Psi+", "Psi-"]},
            "n_bootstrap": {"type": "integer", "minimum": 0},
            "max_iter": {"type": "integer", "minimum": 1},
        }),
        "chsh": _block(["angle_convention", "angles", "duration_s"], {
            "angle_convention": _convention,
            "angles": {"oneOf": [{"type": "array", "items": _num, "minItems": 4, "maxItems": 4},
                                 {"const": "optimize"}]},
            "duration_s": _pos,
            "n_bootstrap": {"type": "integer", "minimum": 2},
        }),
        "teleport": _block(["inputs"], {
            "inputs": {"type": "array", "minItems": 1, "items": {"oneOf": [
                {"enum": ["H", "V", "D", "A", "R", "L"]},
                _block(["hwp_deg", "qwp_deg"], {"hwp_deg": _num, "qwp_deg": _num}),
            ]}},
            "bsm_visibility": _unit,
            "calibrate_to": _unit,
            "convention": {"enum": ["standard", "paper"]},
            "monte_carlo": _block(["event_rate", "duration_s"], {"event_rate": _pos, "duration_s": _pos}),
        }),
        "table_row": _block([], {
            "powers_mw": {"type": "array", "items": _nonneg, "minItems": 2},
            "duration_s": _pos,
            "subtract_accidentals": {"type": "boolean"},
        }),
    },
}

_BLOCK_FOR = {
    "rates-sweep": "rates_sweep", "fringe": "fringe", "tomo": "tomo",
    "chsh": "chsh", "teleport": "teleport", "table-row": "table_row",
}


@dataclass(frozen=True)
class CampaignConfig:
    experiment: str
    seed: int
    source: SourceConfig
    params: dict
    out_dir: Path


def _json_path(err) -> str:
    path = "$"
    for p in err.absolute_path:
        path += f"[{p}]" if isinstance(p, int) else f".{p}"
    return path


def validate(doc: dict) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(list(e.absolute_path)), str(e.absolute_path)))
    if errors:
        err = errors[0]
        raise ConfigError(err.message, _json_path(err))


def build_source(block: dict | None) -> SourceConfig:
    block = dict(block or {})
    preset = block.pop("preset", "paper")
    base = paper_preset() if preset == "paper" else ideal_config()
    try:
        return base.replace(**block)
    except ValueError as exc:
        raise ConfigError(str(exc), "$.source") from None


def from_dict(doc: dict, experiment: str | None = None, seed: int | None = None,
              out_dir: str | Path | None = None) -> CampaignConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    validate(doc)
    declared = doc.get("experiment")
    if experiment is None:
        experiment = declared
    if experiment is None:
        raise ConfigError("experiment not given on the command line or in the config", "$.experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}", "$.experiment")
    if declared is not None and declared != experiment:
        raise ConfigError(f"config declares experiment {declared!r}, command asks for {experiment!r}",
                          "$.experiment")
    block = _BLOCK_FOR[experiment]
    if block not in doc and experiment != "table-row":
        raise ConfigError(f"missing parameter block {block!r} for experiment {experiment!r}", f"$.{block}")
    if seed is None:
        seed = doc["seed"]
    if out_dir is None:
        out_dir = doc.get("output", {}).get("dir", "out")
    return CampaignConfig(experiment, int(seed), build_source(doc.get("source")),
                          dict(doc.get(block, {})), Path(out_dir))


def load(path, experiment: str | None = None, seed: int | None = None,
         out_dir: str | Path | None = None) -> CampaignConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return from_dict(doc, experiment, seed, out_dir)
