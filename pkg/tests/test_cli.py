import csv
import json
import math

import pytest

from cuspwave.cli import csv_text, fmt, run, to_json


@pytest.fixture()
def zero_cfg(tmp_path):
    path = tmp_path / "zero.json"
    path.write_text('{"vorticity": {"kind": "zero"}}')
    return str(path)


@pytest.fixture()
def half_cfg(tmp_path):
    path = tmp_path / "half.json"
    path.write_text('{"vorticity": {"kind": "constant", "b": 0.5}}')
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_formatting():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(math.inf) == "inf"
    text = to_json({"b": math.inf, "a": 0.1})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": 0.1, "b": "inf"}
    assert csv_text(["x"], [(1.5,)]) == "x\n1.5\n"


def test_critical(tmp_path, zero_cfg, half_cfg):
    assert run(["critical", "--config", zero_cfg, "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "critical.json").read_text())
    assert abs(data["rC"] - 1.0) <= 1e-10
    assert data["d0"] == "inf" and data["r0"] == "inf" and data["class"] == "I"
    assert run(["critical", "--config", half_cfg, "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "critical.json").read_text())
    assert data["class"] == "III" and abs(data["r0"] - 4 / 3) <= 1e-12


def test_stream_grid_csv(tmp_path, zero_cfg):
    assert run(["stream", "--config", zero_cfg, "--out", str(tmp_path), "--lambda-grid", "0.5:3:6"]) == 0
    rows = read_csv(tmp_path / "stream.csv")
    assert rows[0] == ["lambda", "depth", "bernoulli"]
    assert len(rows) == 7
    for lam, d, r in rows[1:]:
        lam = float(lam)
        assert abs(float(d) - 1 / lam) <= 1e-12
        assert abs(float(r) - (lam ** 3 + 2) / (3 * lam)) <= 1e-12


def test_spectrum(tmp_path, zero_cfg):
    assert run(["spectrum", "--config", zero_cfg, "--out", str(tmp_path), "--lambda", "1.2"]) == 0
    data = json.loads((tmp_path / "spectrum.json").read_text())
    assert set(data) >= {"lambda", "mu0", "mu1", "kStar", "frakm", "frakM"}
    assert data["mu0"] > 0 and data["kStar"] is None
    assert read_csv(tmp_path / "phi0.csv")[0] == ["p", "phi0"]


def test_stokes_and_restart(tmp_path, zero_cfg):
    out = tmp_path / "s"
    out.mkdir()
    args = ["stokes", "--config", zero_cfg, "--out", str(out), "--r", "1.035556", "--t-list", "+1e-3,+2e-3"]
    assert run(args) == 0
    summary = read_csv(out / "wave_summary.csv")
    assert summary[0] == ["t", "Lambda", "minEta", "maxEta", "flowForce", "maxSlope", "minPsiY"]
    assert len(summary) == 3
    assert read_csv(out / "wave_000.csv")[0] == ["q", "p", "h"]
    first = (out / "wave_001.csv").read_text()
    again = tmp_path / "again"
    again.mkdir()
    restart = args[:4] + [str(again)] + args[5:8] + ["+2e-3", "--restart", str(out / "wave_001.csv")]
    assert run(restart) == 0
    assert (again / "wave_000.csv").read_text() == first


def test_exit_codes(tmp_path, zero_cfg):
    bad = tmp_path / "bad.json"
    bad.write_text('{"vortcity": {"kind": "zero"}}')
    assert run(["critical", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert run(["verify-bl", "--config", zero_cfg, "--out", str(tmp_path), "--r", "0.99",
                "--t-list", "+1e-3"]) == 2
    assert run(["stokes", "--config", zero_cfg, "--out", str(tmp_path), "--r", "1.035556",
                "--t-list", "+1e-3,+0.5"]) == 3
    assert (tmp_path / "wave_000.csv").exists()
    with pytest.raises(SystemExit) as exc:
        run(["bogus"])
    assert exc.value.code == 2


def test_region_deterministic(tmp_path, half_cfg):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    assert run(["region", "--config", half_cfg, "--out", str(a), "--r-max", "2", "--n", "9"]) == 0
    assert run(["region", "--config", half_cfg, "--out", str(b), "--r-max", "2", "--n", "9",
                "--jobs", "2"]) == 0
    text = (a / "region.csv").read_text()
    assert text == (b / "region.csv").read_text()
    rows = read_csv(a / "region.csv")
    assert rows[0] == ["r", "sMinus", "sPlus"]
    assert abs(float(rows[-1][0]) - 4 / 3) <= 1e-12
