import copy
import json

import pytest

from vwwave import config as cf
from vwwave.errors import ConfigurationError

BASE = {
    "problem": {"coefficients": [{"kind": "heaviside"}], "g0": {"kind": "gaussian"}},
    "regularization": {"kernels": [{"kind": "compact-bump"}], "scales": [{"kind": "sqrtlog"}]},
}


def _with(path, value, base=BASE):
    raw = copy.deepcopy(base)
    node = raw
    keys = path.split(".")
    for k in keys[:-1]:
        node = node[int(k)] if isinstance(node, list) else node.setdefault(k, {})
    node[keys[-1]] = value
    return raw


def test_defaults_filled():
    cfg = cf.resolve(copy.deepcopy(BASE))
    assert cfg["grid"]["points"] == 1024
    assert cfg["problem"]["g1"] == {"kind": "zero"}
    assert cfg["regularization"]["data_kernel"]["kind"] == "vanishing-moments"
    assert len(cf.build_ladder(cfg["regularization"]["ladder"])) == 8


def test_resolved_config_is_fixed_point():
    cfg = cf.resolve(copy.deepcopy(BASE))
    again = cf.resolve(json.loads(json.dumps(cfg)))
    assert again == cfg


@pytest.mark.parametrize("path,value,where", [
    ("problem.coefficients.0.height", -1, "problem.coefficients.0.height"),
    ("grid.cfl", 0.9, "grid.cfl"),
    ("regularization.kernels", [{"kind": "vanishing-moments"}], "regularization.kernels.0"),
    ("analyses.consistency", True, "analyses.consistency"),
    ("regularization.ladder", {"values": [0.5, 0.25]}, "regularization.ladder"),
    ("regularization.scales", [{"kind": "example1-auto"}], "regularization.scales.0"),
    ("problem.dimension", 2, "problem.coefficients"),
    ("regularization.scales", [{"kind": "power", "exponent": 3.0}], "regularization.scales.0"),
    ("grid.boundary", "zero", None),
])
def test_validation_paths(path, value, where):
    raw = _with(path, value)
    if where is None:
        cf.resolve(raw)  # zero boundary is fine without data regularisation analyses
        raw["analyses"] = {"sensitivity": True}
        raw["regularization"]["kernels"].append({"kind": "matching-bump"})
        where = "grid.boundary"
    with pytest.raises(ConfigurationError) as exc:
        cf.resolve(raw)
    assert exc.value.path == where


def test_unknown_key_rejected():
    with pytest.raises(ConfigurationError):
        cf.resolve(_with("grid.colour", "red"))


def test_load_errors(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigurationError):
        cf.load(p)
    with pytest.raises(ConfigurationError):
        cf.load(tmp_path / "missing.json")


@pytest.mark.parametrize("name", ["heaviside.json", "example1_sensitivity.json", "consistency.json"])
def test_bundled_configs_validate(name):
    cfg = cf.load(cf.bundled(name))
    assert cfg["name"]


def test_matching_bump_built_from_reference():
    ks = cf.build_kernels([{"kind": "compact-bump"}, {"kind": "matching-bump", "sharpness": 2.0}])
    assert ks[1].derivative_supnorm(1) == pytest.approx(ks[0].derivative_supnorm(1), rel=1e-3)
