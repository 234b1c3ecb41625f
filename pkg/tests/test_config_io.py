import numpy as np
import pytest

from spacetime_wf import io as sio
from spacetime_wf.config import ConfigError, bundled, h_values, loads, scenario_dir
from spacetime_wf.grids import SpacetimeField

GOOD = """
name = "t"
[field]
spec = "identity"
[initial]
kind = "gaussian"
[grid]
L = 20.0
N = 256
t_window = [-1.0, 1.0]
Nt = 32
[solver]
kind = "free"
[verify]
relation = "free-initial"
points = [[0.5, 0.0, 1.0]]
"""


def test_bundled_scenarios_validate():
    from spacetime_wf.config import load
    names = sorted(p.stem for p in scenario_dir().glob("*.toml"))
    assert {"free-gaussian", "corollary-d1-bump"} <= set(names)
    for n in names:
        assert load(bundled(n)).name == n


def test_good_config_loads():
    sc = loads(GOOD)
    assert sc.get("grid", "N") == 256


def test_unknown_key_is_line_anchored():
    bad = GOOD.replace("Nt = 32", "Nt = 32\nbogus = 1")
    with pytest.raises(ConfigError) as e:
        loads(bad, "x.toml")
    assert e.value.line == bad.splitlines().index("bogus = 1") + 1
    assert f"x.toml:{e.value.line}:" in str(e.value)


def test_toml_syntax_error_has_line():
    with pytest.raises(ConfigError) as e:
        loads(GOOD.replace("N = 256", "N = = 256"), "x.toml")
    assert e.value.line is not None


def test_semantic_checks():
    with pytest.raises(ConfigError):
        loads(GOOD.replace("N = 256", "N = 300"))
    with pytest.raises(ConfigError):
        loads(GOOD.replace('relation = "free-initial"', 'relation = "corollary"'))


def test_h_exponents():
    assert h_values({"h_exponents": [1, 2]}) == (0.5, 0.25)


def test_spacetime_container_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    u = SpacetimeField(5.0, 64, -1.0, 1.0, 16, rng.normal(size=(16, 64)) + 1j * rng.normal(size=(16, 64)),
                       {"kind": "test"})
    sio.write_spacetime(tmp_path / "u.stwf", u)
    v = sio.read_spacetime(tmp_path / "u.stwf")
    assert (v.L, v.N, v.t0, v.t1, v.Nt) == (u.L, u.N, u.t0, u.t1, u.Nt)
    assert np.abs(v.materialize() - u.materialize()).max() < 1e-6  # single precision payload


def test_manifest_detects_changes(tmp_path):
    (tmp_path / "a.txt").write_text("one")
    sio.write_manifest(tmp_path)
    assert sio.check_manifest(tmp_path) == []
    (tmp_path / "a.txt").write_text("two")
    assert sio.check_manifest(tmp_path)
