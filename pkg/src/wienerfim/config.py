"""JSON run configuration: model, input and command options."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .model import LinearParams, NormalizationConstraint, WienerModel
from .realization import GaussianInputSpec

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["linear", "nonlinearity", "constraint"],
    "properties": {
        "linear": {
            "type": "object",
            "additionalProperties": False,
            "required": ["g0"],
            "properties": {"a": _VEC, "g": _VEC, "g0": _NUM, "fir": {"type": "boolean"}},
        },
        "nonlinearity": {
            "type": "object",
            "additionalProperties": False,
            "required": ["alpha_bar"],
            "properties": {"alpha_bar": _VEC},
        },
        "constraint": {
            "type": "object",
            "additionalProperties": False,
            "required": ["upsilon"],
            "properties": {
                "upsilon": _VEC,
                "ell": {"type": "integer", "minimum": 0},
                "order": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            },
        },
        "input": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mean": _NUM,
                "kind": {"enum": ["white", "shaped", "direct"]},
                "variance": _NUM,
                "shaping": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["num", "den"],
                    "properties": {"num": _VEC, "den": _VEC},
                },
                "sigma": {"type": "array", "items": _VEC},
            },
        },
        "options": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "samples": {"type": "integer", "minimum": 1},
                "burn_in": {"type": "integer", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
                "streams": {"type": "integer", "minimum": 1},
                "scales": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "budget": _NUM,
                "tolerance": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}


class ConfigError(ValueError):
    code = "config"


@dataclass(frozen=True)
class RunConfig:
    model: WienerModel
    input: GaussianInputSpec
    options: dict = field(default_factory=dict)
    digest: str = ""


def config_digest(doc: dict) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def parse_input(doc: dict | None) -> GaussianInputSpec:
    doc = dict(doc or {"kind": "white", "variance": 1.0})
    kind = doc.get("kind", "white")
    mean = doc.get("mean", 0.0)
    if kind == "white":
        return GaussianInputSpec.white(doc.get("variance", 1.0), mean)
    if kind == "shaped":
        if "shaping" not in doc:
            raise ConfigError("shaped input needs a 'shaping' object")
        return GaussianInputSpec.shaped(doc["shaping"]["num"], doc["shaping"]["den"], mean)
    if "sigma" not in doc:
        raise ConfigError("direct input needs 'sigma'")
    return GaussianInputSpec.direct(doc["sigma"], mean)


def parse_config(doc: dict) -> RunConfig:
    """Validate a decoded config document and build the model objects.

    Schema violations raise :class:`ConfigError`; domain violations (an
    unstable denominator, a bad constraint) raise the library's own errors.
    """
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    lin = doc["linear"]
    linear = LinearParams(
        a=lin.get("a", []), g=lin.get("g", []), g0=lin["g0"], fir=lin.get("fir", False)
    )
    con = doc["constraint"]
    constraint = NormalizationConstraint(
        upsilon=con["upsilon"], ell=con.get("ell"), order=con.get("order")
    )
    model = WienerModel(linear, doc["nonlinearity"]["alpha_bar"], constraint)
    return RunConfig(
        model=model,
        input=parse_input(doc.get("input")),
        options=dict(doc.get("options", {})),
        digest=config_digest(doc),
    )


def load_config(path) -> RunConfig:
    """Read and parse a config file.  ``OSError`` propagates for I/O failures."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return parse_config(doc)
