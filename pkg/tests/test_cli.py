import json

import numpy as np
import pytest

from toposense import cli
from toposense.io import read_table
from toposense.model import NumericalError

SMALL = ["--N", "41", "--n-grid", "201", "--n-samples", "4", "--t-max", "30", "--t-step", "5"]


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_bands_energies(tmp_path):
    assert cli.main(["bands", "--N", "41", "--out", str(tmp_path)]) == 0
    tab = read_table(tmp_path / "bands.csv")
    gap = tab["energy"][tab["in_gap"] == 1]
    np.testing.assert_allclose(np.sort(gap), [-0.0743274, 0.0743274], atol=1e-6)
    amps = read_table(tmp_path / "amplitudes.csv")
    assert amps["label"][0] == "emitter" and amps["label"][1] == "site-1"
    assert amps["index"].size == 42


def test_dynamics_starts_at_one(tmp_path):
    assert cli.main(["dynamics", "--out", str(tmp_path)]) == 0
    tab = read_table(tmp_path / "dynamics.csv")
    assert tab["t"][0] == 0.0
    assert tab["p1"][0] == pytest.approx(1.0, abs=1e-12)
    assert "p1_dephased" not in tab


@pytest.mark.parametrize("command", ["bands", "fisher", "bayes-time", "posterior"])
def test_deterministic(tmp_path, command):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main([command, *SMALL, "--out", str(a)]) == 0
    assert cli.main([command, *SMALL, "--out", str(b)]) == 0
    assert _files(a) == _files(b)


def test_manifest_round_trip(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["bayes-time", *SMALL, "--seed", "7", "--out", str(a)]) == 0
    man = json.loads((a / "manifest.json").read_text())
    assert man["seed"] == 7 and man["command"] == "bayes-time"
    assert set(man["versions"]) == {"toposense", "numpy", "scipy"}
    assert cli.main(["bayes-time", "--config", str(a / "manifest.json"), "--out", str(b)]) == 0
    assert _files(a) == _files(b)


def test_config_file_and_flag_precedence(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# comment\nN = 41\ng = 0.05\ntimes = 10, 20\n")
    args = cli.build_parser().parse_args(["bands", "--config", str(conf), "--g", "0.08"])
    cfg = cli.resolve_config(args)
    assert cfg.N == 41 and cfg.g == 0.08 and cfg.times == [10.0, 20.0]


def test_underscore_and_dash_flags():
    a = cli.build_parser().parse_args(["bands", "--n_grid", "11"])
    b = cli.build_parser().parse_args(["bands", "--n-grid", "11"])
    assert a.n_grid == b.n_grid == "11"


def test_env_workers(monkeypatch):
    monkeypatch.setenv("TOPOSENSE_WORKERS", "3")
    cfg = cli.resolve_config(cli.build_parser().parse_args(["bands"]))
    assert cfg.workers == 3
    cfg = cli.resolve_config(cli.build_parser().parse_args(["bands", "--workers", "1"]))
    assert cfg.workers == 1


@pytest.mark.parametrize("argv", [
    ["bands", "--delta", "1.5"],
    ["bands", "--which", "Delta"],
    ["bands", "--M", "0"],
    ["bands", "--N", "abc"],
    ["bands", "--N", "41.5"],
    ["bands", "--g", "0.5"],
    ["disorder"],
    ["dephasing"],
    ["even-n", "--N", "41"],
    ["bayes-time", "--inference", "oracle"],
])
def test_validation_failures(tmp_path, capsys, argv):
    assert cli.main([*argv, "--out", str(tmp_path)]) == 1
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["exit_code"] == 1 and record["message"]


def test_unknown_config_key(tmp_path, capsys):
    conf = tmp_path / "bad.conf"
    conf.write_text("N = 41\ncolour = blue\n")
    assert cli.main(["bands", "--config", str(conf), "--out", str(tmp_path)]) == 1
    assert "colour" in json.loads(capsys.readouterr().err)["message"]


def test_numerical_failure_exit_code(tmp_path, capsys, monkeypatch):
    def boom(cfg, out):
        raise NumericalError("step underflow at t = 3.0")

    monkeypatch.setitem(cli.HANDLERS, "dynamics", boom)
    assert cli.main(["dynamics", "--out", str(tmp_path)]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "NumericalError"


def test_help_lists_schemas(capsys):
    with pytest.raises(SystemExit):
        cli.main(["--help"])
    text = capsys.readouterr().out
    for name in ("bands.csv", "dynamics.csv", "bayes_time_<which>.csv", "TOPOSENSE_WORKERS"):
        assert name in text


def test_dephasing_column(tmp_path):
    assert cli.main(["dynamics", "--N", "41", "--gamma", "0.05", "--t-max", "20",
                     "--out", str(tmp_path)]) == 0
    tab = read_table(tmp_path / "dynamics.csv")
    assert tab["p1_dephased"][0] == pytest.approx(1.0)
    assert np.all(tab["p1_dephased"] <= 1.0)


def test_even_n_outputs(tmp_path):
    assert cli.main(["even-n", "--N", "40", *SMALL[2:], "--out", str(tmp_path)]) == 0
    tab = read_table(tmp_path / "bands.csv")
    assert int(tab["in_gap"].sum()) == 3
    for name in ("bayes_time_g.csv", "bayes_time_delta.csv"):
        assert (tmp_path / name).exists()


def test_disorder_and_dephasing_commands(tmp_path):
    assert cli.main(["disorder", *SMALL, "--W", "0.1", "--n-realizations", "2",
                     "--out", str(tmp_path / "d")]) == 0
    tab = read_table(tmp_path / "d" / "disorder_g.csv")
    assert np.all(tab["mean_delta_sq"] >= 0)
    assert cli.main(["dephasing", *SMALL, "--gamma", "0.05", "--times", "20 30",
                     "--out", str(tmp_path / "p")]) == 0
    tab = read_table(tmp_path / "p" / "dephasing_g.csv")
    np.testing.assert_array_equal(tab["t"], [20.0, 30.0])
