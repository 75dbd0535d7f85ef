import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuspwave import ValidationError
from cuspwave.config import DEFAULTS, parse_config, parse_config_text, serialize


def test_minimal_config_gets_defaults():
    cfg = parse_config_text('{"vorticity": {"kind": "zero"}}')
    assert (cfg.Np, cfg.Nq) == (64, 256)
    assert (cfg.newton_tol, cfg.quadrature_tol, cfg.root_tol) == (1e-10, 1e-12, 1e-12)
    assert cfg.slope_bound == 1.0
    assert json.loads(serialize(cfg))["grid"] == DEFAULTS["grid"]


@pytest.mark.parametrize(
    "text, pointer",
    [
        ('{"vortcity": {"kind": "zero"}}', "/vortcity"),
        ('{"vorticity": {"kind": "zero"}, "vorticity": {"kind": "zero"}}', "/vorticity"),
        ('{"vorticity": {"kind": "zero"}, "grid": {"Np": 4}}', "/grid/Np"),
        ('{"vorticity": {"kind": "zero"}, "grid": {"Nx": 4}}', "/grid/Nx"),
        ('{"vorticity": {"kind": "zero"}, "grid": {"Np": 16.5}}', "/grid/Np"),
        ('{"vorticity": {"kind": "zero"}, "tolerances": {"newton": 0}}', "/tolerances/newton"),
        ('{"vorticity": {"kind": "zero"}, "budgets": {"lambdaCap": -1}}', "/budgets/lambdaCap"),
        ('{"vorticity": {"kind": "zero"}, "slopeBoundM": "big"}', "/slopeBoundM"),
        ('{"vorticity": {"kind": "constant"}}', "/vorticity/b"),
        ('{"vorticity": {"kind": "samples", "p": [0, 2], "omega": [0, 0]}}', "/vorticity/p"),
        ('{"grid": {}}', "/vorticity"),
        ("[]", ""),
    ],
)
def test_rejections_cite_pointer(text, pointer):
    with pytest.raises(ValidationError) as exc:
        parse_config_text(text)
    assert exc.value.pointer == pointer


def test_invalid_json_and_missing_file(tmp_path):
    with pytest.raises(ValidationError):
        parse_config_text("{not json")
    with pytest.raises(ValidationError):
        parse_config(tmp_path / "absent.json")


def test_samples_round_trip(tmp_path):
    text = ('{"vorticity": {"kind": "samples", "p": [0, 0.25, 1], "omega": [0.1, -0.3, 0.7]},'
            ' "grid": {"Np": 32}}')
    path = tmp_path / "c.json"
    path.write_text(text)
    once = serialize(parse_config(path))
    assert serialize(parse_config_text(once)) == once
    assert once.endswith("\n")


@settings(max_examples=50, deadline=None)
@given(
    st.integers(8, 512),
    st.integers(8, 2048),
    st.floats(1e-14, 1e-2),
    st.floats(1e-3, 1e3),
    st.one_of(
        st.just({"kind": "zero"}),
        st.builds(lambda b: {"kind": "constant", "b": b}, st.floats(-2, 2)),
        st.builds(lambda a, b: {"kind": "affine", "a": a, "b": b}, st.floats(-2, 2), st.floats(-2, 2)),
    ),
)
def test_serialisation_is_byte_stable(np_, nq, tol, m, vort):
    obj = {"vorticity": vort, "grid": {"Np": np_, "Nq": nq}, "tolerances": {"newton": tol},
           "slopeBoundM": m}
    once = serialize(parse_config_text(json.dumps(obj)))
    assert serialize(parse_config_text(once)) == once
