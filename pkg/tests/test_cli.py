import json

import pytest

from spacetime_wf.cli import main


def test_scatter_example(capsys):
    assert main(["scatter", "--field", "identity", "--point", "-1,2,1.5", "--dir", "+"]) == 0
    out = capsys.readouterr().out
    assert "x+=2 " in out and "xi+=1.5 " in out


def test_scatter_json(capsys):
    assert main(["scatter", "--point", "-1,2,1.5", "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["x"] == [2.0]


def test_partition_check_example(capsys):
    assert main(["partition-check", "--eps", "0.25", "--samples", "2000"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_egorov_check_example(capsys):
    assert main(["egorov-check", "--t", "1", "--n", "1024", "--states", "3"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_malformed_config_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.toml"
    p.write_text('name = "bad"\n[grid]\nL = 10.0\nN = = 8\n')
    assert main(["verify", "--config", str(p)]) == 2
    assert f"{p}:4:" in capsys.readouterr().err


def test_unknown_field_exit_2():
    assert main(["scatter", "--field", "nope", "--point", "-1,0,1"]) == 2


def test_margin_violation_exit_4(tmp_path):
    # a symbol centred 1 from the edge of a 2-unit box leaves no margin
    assert main(["detect", "--scenario", "free-gaussian", "--point", "39.9,1"]) == 4


def test_out_and_check(tmp_path, capsys):
    out = tmp_path / "o"
    args = ["flow", "--point", "0,0,1", "--t-end", "1", "--csv", "--out", str(out)]
    assert main(args) == 0
    assert (out / "MANIFEST").exists()
    assert main(args + ["--check"]) == 0
    (out / "result.csv").write_text("tampered\n")
    assert main(args + ["--check"]) == 1


@pytest.mark.parametrize("cmd", ["flow", "scatter", "deform", "partition-check", "egorov-check", "detect",
                                 "verify", "run"])
def test_help(cmd):
    with pytest.raises(SystemExit) as e:
        main([cmd, "--help"])
    assert e.value.code == 0


@pytest.mark.slow
def test_run_outputs_are_reproducible(tmp_path, capsys):
    out = tmp_path / "fd"
    assert main(["run", "--scenario", "free-delta", "--out", str(out)]) == 0
    names = {line.split("  ", 1)[1] for line in (out / "MANIFEST").read_text().splitlines()}
    assert {"report.json", "decay.csv", "decay.svg", "heatmap.svg", "orbits.svg"} <= names
    assert main(["run", "--scenario", "free-delta", "--out", str(out), "--check"]) == 0
