import copy
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cscat.config import DEFAULTS, SCENARIOS, parse_config, serialize_config, validate_document
from cscat.errors import ConfigurationError

MIN_MIE = {"scenario": "mie_check",
           "scene": {"obstacle": {"type": "ball", "center": [0, 0, 0], "radius": 1.0}}}


def test_minimal_mie_config_fills_defaults():
    cfg = parse_config(json.dumps(MIN_MIE))
    assert cfg.numerics == DEFAULTS["mie_check"]
    assert cfg.scene["wave_number"] == 1.0 and cfg.scene["media"] == []
    echoed = json.loads(serialize_config(cfg))
    assert echoed["numerics"]["n_directions"] == 128
    assert echoed["schema_version"] == "1"


def _errors(doc):
    with pytest.raises(ConfigurationError) as ei:
        parse_config(doc)
    return ei.value.errors


def test_negative_wave_number_reports_range():
    doc = copy.deepcopy(MIN_MIE)
    doc["scene"]["wave_number"] = -1
    errs = _errors(doc)
    assert any("scene/wave_number" in e and "(0, 20]" in e for e in errs)


def test_unknown_scenario_lists_choices():
    doc = dict(MIN_MIE, scenario="mie")
    (err,) = [e for e in _errors(doc) if e.startswith("scenario")]
    for name in SCENARIOS:
        assert name in err


def test_unknown_key_is_named():
    doc = dict(MIN_MIE, numerics={"n_direction": 12})
    assert any("n_direction" in e and "numerics" in e for e in _errors(doc))


def test_all_errors_are_reported():
    doc = copy.deepcopy(MIN_MIE)
    doc["scene"]["wave_number"] = -1
    doc["numerics"] = {"tol": 1.0, "order": 1, "bogus": 3}
    assert len(_errors(doc)) >= 4


def test_invalid_json_text():
    with pytest.raises(ConfigurationError):
        parse_config("{not json")


def test_fourier_requires_tilde_scene():
    doc = {"scenario": "fourier_identity", "scene": {"obstacle": None, "media": []}}
    assert any("scene_tilde" in e for e in _errors(doc))


def test_semantic_scene_errors_surface():
    doc = {"scenario": "validate", "scene": {"obstacle": None, "media": [
        {"shape": {"type": "ball", "center": [0, 0, 0], "radius": 1.0}, "contrast": 0.1, "contact": "auto"}]}}
    assert any("scene" in e and "obstacle" in e for e in _errors(doc))


vec = st.lists(st.floats(-3, 3, allow_nan=False, allow_infinity=False), min_size=3, max_size=3)


@st.composite
def configs(draw):
    scenario = draw(st.sampled_from(["mie_check", "probe", "cgo_phase", "cgo_remainder", "herglotz_fit"]))
    doc = {"scenario": scenario, "seed": draw(st.integers(0, 2**31 - 1)),
           "scene": {"obstacle": {"type": "ball", "center": draw(vec), "radius": draw(st.floats(0.1, 2))},
                     "media": [], "wave_number": draw(st.floats(0.01, 20))},
           "output": {"directory": draw(st.text("abc/_", min_size=1, max_size=8)), "csv": draw(st.booleans())}}
    if scenario == "cgo_phase":
        doc["numerics"] = {"taus": draw(st.lists(st.floats(0.1, 100), min_size=1, max_size=4)),
                           "n_random": draw(st.integers(0, 500))}
    if scenario == "mie_check":
        doc["numerics"] = {"tol": draw(st.floats(1e-10, 1e-2)), "n_directions": draw(st.integers(1, 4096))}
    return doc


@given(configs())
def test_round_trip(doc):
    cfg = parse_config(doc)
    text = serialize_config(cfg)
    again = parse_config(text)
    assert again == cfg
    assert serialize_config(again) == text


def test_shipped_configs_are_valid():
    import glob
    import os
    paths = glob.glob(os.path.join(os.path.dirname(__file__), "..", "configs", "*.json"))
    assert paths
    for p in paths:
        assert validate_document(json.load(open(p))) == [], p
