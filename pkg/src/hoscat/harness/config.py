"""Scenario configuration: schema validation, defaults and hashing."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field as dc_field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from ..classflow import PhasePoint
from ..errors import ConfigError
from ..fields import CoefficientField, field_from_spec

SCHEMA_VERSION = 1


def load_schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("schema.json").read_text())


def validate(raw: dict) -> None:
    try:
        jsonschema.validate(raw, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    raw: dict = dc_field(repr=False)

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    @property
    def out_dir(self) -> str | None:
        return self.raw.get("out_dir")

    @property
    def plots(self) -> bool:
        return bool(self.raw.get("plots", False))

    def get(self, key, default=None):
        return copy.deepcopy(self.raw.get(key, default))

    def tol(self, key, default):
        return float(self.raw.get("tolerances", {}).get(key, default))

    def field(self) -> CoefficientField:
        spec = self.raw.get("field")
        if spec is None:
            raise ConfigError(f"scenario {self.scenario!r} needs a field")
        return field_from_spec(spec)

    def points(self) -> list[PhasePoint]:
        return [PhasePoint(p["x"], p["xi"]) for p in self.raw.get("points", [])]

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    @property
    def hash(self) -> str:
        """Digest of everything that can change results (output location excluded)."""
        body = {k: v for k, v in self.raw.items() if k not in ("out_dir", "plots")}
        return hashlib.sha256(canonical_json(body).encode()).hexdigest()[:16]


def resolve(raw: dict, defaults: dict) -> ScenarioConfig:
    """Validate ``raw`` and fill unset top-level keys from ``defaults``."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    validate(raw)
    merged = copy.deepcopy(defaults)
    merged.update(copy.deepcopy(raw))
    merged["schema_version"] = SCHEMA_VERSION
    validate(merged)
    return ScenarioConfig(merged["scenario"], merged)


def read_config(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
