import json
from pathlib import Path

import pytest

from vwwave.cli import main
from vwwave.config import bundled

SMALL = {
    "name": "small",
    "problem": {"coefficients": [{"kind": "heaviside"}], "g0": {"kind": "gaussian", "center": 0.5, "width": 0.5}},
    "regularization": {"kernels": [{"kind": "compact-bump"}, {"kind": "matching-bump"}],
                       "scales": [{"kind": "sqrtlog"}, {"kind": "loglog"}],
                       "ladder": {"j_min": 2, "j_max": 6}},
    "grid": {"points": 256},
    "analyses": {"sobolev": {"k_max": 2}},
}


@pytest.fixture
def small(tmp_path):
    p = tmp_path / "small.json"
    p.write_text(json.dumps(SMALL))
    return p


def _run_dir(capsys):
    return Path(capsys.readouterr().out.strip().splitlines()[-1])


def test_verify_targets(capsys):
    assert main(["verify", "symmetriser", "--n", "4"]) == 0
    assert "0" in capsys.readouterr().out
    assert main(["verify", "identities", "--n", "2", "--trials", "5", "--seed", "7"]) == 0
    assert main(["verify", "oracle"]) == 0


def test_identities_json(tmp_path):
    out = tmp_path / "id.json"
    assert main(["verify", "identities", "--n", "1", "--trials", "3", "--json", str(out)]) == 0
    assert json.loads(out.read_text())[0]["n"] == 1


def test_config_error_exit_2(tmp_path, capsys):
    bad = dict(SMALL, regularization=dict(SMALL["regularization"], kernels=[{"kind": "vanishing-moments"}]))
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(bad))
    assert main(["run", str(p), "--output", str(tmp_path)]) == 2
    assert "regularization.kernels.0" in capsys.readouterr().err


def test_compute_error_exit_1(tmp_path, capsys):
    # a kernel narrower than the grid can resolve only shows up in compute
    cfg = dict(SMALL, grid={"points": 64})
    cfg["regularization"] = dict(SMALL["regularization"], scales=[{"kind": "power", "exponent": 1.0}])
    cfg["problem"] = dict(SMALL["problem"], coefficients=[{"kind": "constant", "value": 1.0}])
    cfg["analyses"] = {"gronwall": True}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    rc = main(["run", str(p), "--output", str(tmp_path)])
    err = capsys.readouterr().err
    assert rc == 1 and "ResolutionError" in err and "vwwave.analysis" in err


def test_run_is_deterministic_and_append_only(small, tmp_path, capsys):
    assert main(["run", str(small), "--output", str(tmp_path)]) == 0
    a = _run_dir(capsys)
    assert main(["run", str(small), "--output", str(tmp_path)]) == 0
    b = _run_dir(capsys)
    assert a != b
    files = sorted(p.relative_to(a) for p in a.rglob("*.csv"))
    assert files
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes(), f
    for name in ("config.json", "glaeser_axis0.json", "moderateness.json", "gronwall.json", "summary.json"):
        assert (a / name).exists()
    assert list((a / "traces").glob("*.csv"))


def test_echoed_config_reruns_identically(small, tmp_path, capsys):
    assert main(["run", str(small), "--output", str(tmp_path)]) == 0
    a = _run_dir(capsys)
    assert main(["run", str(a / "config.json"), "--output", str(tmp_path)]) == 0
    b = _run_dir(capsys)
    assert (a / "moderateness.csv").read_bytes() == (b / "moderateness.csv").read_bytes()


def test_env_output_root(small, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("VWWAVE_OUTPUT_ROOT", str(tmp_path / "envroot"))
    assert main(["run", str(small)]) == 0
    assert _run_dir(capsys).parent == tmp_path / "envroot"


def test_sweep_and_report(small, tmp_path, capsys):
    assert main(["sweep", str(small), "--output", str(tmp_path)]) == 0
    d = _run_dir(capsys)
    rows = (d / "sweep.csv").read_text().splitlines()
    assert len(rows) == 5
    assert main(["report", str(d)]) == 0
    assert len(list(d.rglob("moderateness.png"))) == 4
    assert (d / "summary.md").exists()


def test_report_empty_dir(tmp_path):
    assert main(["report", str(tmp_path)]) == 1
    assert main(["report", str(tmp_path / "nope")]) == 1


def test_bundled_heaviside_run_and_report(tmp_path, capsys):
    assert main(["run", str(bundled("heaviside.json")), "--output", str(tmp_path)]) == 0
    d = _run_dir(capsys)
    assert len(list((d / "traces").glob("*.csv"))) == 8
    assert (d / "glaeser_axis0.json").exists() and (d / "moderateness.json").exists()
    assert main(["report", str(d)]) == 0
    assert (d / "figures" / "moderateness.png").exists()
    assert (d / "figures" / "energy.png").exists()
    md = (d / "summary.md").read_text()
    assert "moderateness_slope_L2" in md and "missing consistency.json" in md


def test_bundled_sensitivity_run(tmp_path, capsys):
    assert main(["run", str(bundled("example1_sensitivity.json")), "--output", str(tmp_path)]) == 0
    d = _run_dir(capsys)
    rep = json.loads((d / "sensitivity.json").read_text())
    assert rep["mode"] == "example1" and rep["converging"]
    assert main(["report", str(d)]) == 0
    assert (d / "figures" / "sensitivity.png").exists()
