"""Scenario configuration: JSON schema validation, defaults and canonical serialization."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources

import jsonschema

from .errors import ConfigurationError

SCHEMA_VERSION = "1"
SCENARIOS = ("validate", "mie_check", "farfield", "probe", "scan", "herglotz_fit",
             "cgo_phase", "cgo_remainder", "fourier_identity")

_COMMON = {"tol": 1e-8}
_RES = {"panels_per_edge": 2, "order": 6, "h": 0.1}
DEFAULTS = {
    "validate": {"samples": 10000, "voxels": 64},
    "mie_check": dict(_RES, **_COMMON, n_directions=128, incident_direction=[0.0, 0.0, 1.0]),
    "farfield": dict(_RES, **_COMMON, n_directions=64, n_incident=16),
    "probe": dict(_RES, **_COMMON, order=4, x0=[0.0, 0.0, 1.0], normal=[0.0, 0.0, 1.0], probe_h=0.25, n_max=12,
                  source_kinds=["monopole", "dipole"], access_mode="direct", sequence="harmonic", n_dirs=196,
                  regularization=None, blowup_threshold=-0.7, bounded_threshold=-0.2),
    "scan": dict(_RES, **_COMMON, order=4, probe_h=0.25, n_max=12, sequence="harmonic", n_candidates=8,
                 free_space=False, free_space_offset=0.5, blowup_threshold=-0.7, bounded_threshold=-0.2),
    "herglotz_fit": dict(_RES, **_COMMON, source_kind="monopole", source_location=[0.0, 0.0, 4.0],
                         source_axis=[0.0, 0.0, 1.0], region_center=[0.0, 0.0, 0.0], region_radius=1.0,
                         n_dirs=196, regularization=None, synthesize=False, n_eval=8),
    "cgo_phase": {"xi": [1.0, 0.0, 0.0], "taus": [5.0, 10.0, 20.0, 40.0], "n_random": 100, "component": None},
    "cgo_remainder": {"xi": [1.0, 0.0, 0.0], "taus": [5.0, 10.0, 20.0, 40.0], "component": 0, "grid": 64},
    "fourier_identity": {"xi": [1.0, 0.0, 0.0], "taus": [10.0, 20.0, 40.0], "grid": 64,
                         "fourier_tolerance": 0.1},
}
DEFAULT_OUTPUT = {"directory": "out", "csv": True, "json": True}


def load_schema() -> dict:
    text = resources.files("cscat").joinpath("schema/scenario.schema.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    scene: dict
    numerics: dict = field(default_factory=dict)
    output: dict = field(default_factory=lambda: dict(DEFAULT_OUTPUT))
    seed: int = 0
    scene_tilde: dict | None = None
    schema_version: str = SCHEMA_VERSION

    def to_dict(self) -> dict:
        d = {"schema_version": self.schema_version, "scenario": self.scenario, "seed": self.seed,
             "scene": copy.deepcopy(self.scene), "numerics": copy.deepcopy(self.numerics),
             "output": copy.deepcopy(self.output)}
        if self.scene_tilde is not None:
            d["scene_tilde"] = copy.deepcopy(self.scene_tilde)
        return d


def _path(err) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def _describe(err) -> str:
    v = err.validator
    if v == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        return f"{_path(err)}: unknown key(s) {extra}"
    if v == "enum":
        return f"{_path(err)}: {err.instance!r} is not one of {list(err.validator_value)}"
    if v in ("minimum", "exclusiveMinimum", "maximum", "exclusiveMaximum"):
        lo = err.schema.get("minimum", err.schema.get("exclusiveMinimum"))
        hi = err.schema.get("maximum", err.schema.get("exclusiveMaximum"))
        lb = "[" if "minimum" in err.schema else "("
        rb = "]" if "maximum" in err.schema else ")"
        rng = f"{lb}{'-inf' if lo is None else lo}, {'inf' if hi is None else hi}{rb}"
        return f"{_path(err)}: {err.instance!r} outside admissible range {rng}"
    if v == "oneOf" and err.context:
        best = min(err.context, key=lambda e: len(list(e.absolute_schema_path)))
        return f"{_path(err)}: {best.message}"
    return f"{_path(err)}: {err.message}"


def validate_document(doc) -> list[str]:
    """All schema and semantic errors of ``doc`` (empty when valid)."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = [_describe(e) for e in sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))]
    if errors or not isinstance(doc, dict):
        return errors
    from .geometry import scene_from_dict
    for key in ("scene", "scene_tilde"):
        if key in doc:
            try:
                scene_from_dict(doc[key])
            except (ConfigurationError, ValueError) as exc:
                errors.append(f"{key}: {exc}")
    if doc["scenario"] == "fourier_identity" and "scene_tilde" not in doc:
        errors.append("scene_tilde: required by the fourier_identity scenario")
    return errors


def parse_config(text) -> ScenarioConfig:
    """Parse a JSON document (text or dict) into a validated config with defaults filled in."""
    if isinstance(text, (str, bytes)):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from None
    else:
        doc = copy.deepcopy(text)
    errors = validate_document(doc)
    if errors:
        exc = ConfigurationError("; ".join(errors))
        exc.errors = errors
        raise exc
    scen = doc["scenario"]
    numerics = dict(DEFAULTS[scen])
    numerics.update(doc.get("numerics", {}))
    output = dict(DEFAULT_OUTPUT)
    output.update(doc.get("output", {}))
    scene = dict(doc["scene"])
    scene.setdefault("obstacle", None)
    scene.setdefault("media", [])
    scene.setdefault("wave_number", 1.0)
    scene.setdefault("enclosing_radius", 5.0)
    tilde = doc.get("scene_tilde")
    return ScenarioConfig(scen, scene, numerics, output, int(doc.get("seed", 0)), tilde,
                          doc.get("schema_version", SCHEMA_VERSION))


def serialize_config(cfg: ScenarioConfig) -> str:
    """Canonical JSON text (sorted keys, fixed indentation)."""
    return json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n"
