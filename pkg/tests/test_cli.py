import csv
import json

import pytest
from hypothesis import given, settings, strategies as st

from cornerscatter.cli import COMMANDS, ConfigError, RunConfig, run
from cornerscatter.harmonic import harmonic_dimension


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_lt_check_counts_and_manifest(workdir):
    assert run(["lt-check", "--dim", "3", "--max-degree", "4"]) == 0
    rows = _rows(workdir / "lt-check.csv")
    assert len(rows) == sum(harmonic_dimension(3, N) for N in range(5))
    assert {r["divisible"] for r in rows} == {"false"}
    assert all(r["valueRe"] != "0" or r["valueIm"] != "0" for r in rows)
    manifest = json.loads((workdir / "lt-check.json").read_text())
    assert manifest["status"] == "ok"
    assert manifest["config"]["params"] == {"dim": 3, "max_degree": 4, "tau": None}
    assert {"numpy", "scipy", "python", "cornerscatter"} <= set(manifest["versions"])
    assert manifest["wall_time_s"] >= 0


def test_unknown_flag_writes_nothing(workdir):
    assert run(["lt-check", "--dim", "2", "--frobnicate"]) == 2
    assert not list(workdir.iterdir())


def test_unknown_command(workdir):
    assert run(["teleport"]) == 2
    assert not list(workdir.iterdir())


def test_config_unknown_key_rejected(workdir):
    (workdir / "cfg.json").write_text(json.dumps({"kmax": 5.0, "colour": "red"}))
    assert run(["ite", "radial", "--config", "cfg.json"]) == 2
    assert sorted(p.name for p in workdir.iterdir()) == ["cfg.json"]


def test_config_mismatched_command_rejected(workdir):
    (workdir / "cfg.json").write_text(json.dumps({"command": "lt-check"}))
    assert run(["ite", "radial", "--config", "cfg.json"]) == 2


def test_flags_override_config(workdir):
    (workdir / "cfg.json").write_text(json.dumps({"m0": 0.9, "kmax": 4.0, "out": "from_file.csv"}))
    assert run(["ite", "radial", "--config", "cfg.json", "--kmax", "6"]) == 0
    rows = _rows(workdir / "from_file.csv")
    assert [round(float(r["k_star"]), 3) for r in rows] == [4.099, 5.292]
    cfg = json.loads((workdir / "from_file.json").read_text())["config"]
    assert cfg["params"] == {"a": 1.0, "m0": 0.9, "kmax": 6.0}


def test_validation_error_writes_nothing(workdir):
    assert run(["scatter", "sweep", "--kmin", "3", "--kmax", "2"]) == 2
    assert run(["lt-check", "--dim", "1"]) == 2
    assert run(["scatter", "sweep", "--shape", "hexagon"]) == 2
    assert not list(workdir.iterdir())


def test_experiment_failure_exit_code(workdir):
    # no non-scattering wavenumber in the bracket: the kernel check fails
    code = run(["cgo", "orthogonality", "--kmin", "2.9", "--kmax", "3.0", "--res", "24"])
    assert code == 3
    assert not (workdir / "orth.csv").exists()


def test_outputs_are_deterministic(workdir):
    args = ["scatter", "sweep", "--shape", "square", "--kmin", "2", "--kmax", "2.2",
            "--steps", "3", "--res", "16"]
    assert run(args + ["--out", "a.csv", "--workers", "1"]) == 0
    assert run(args + ["--out", "b.csv", "--workers", "2"]) == 0
    assert (workdir / "a.csv").read_bytes() == (workdir / "b.csv").read_bytes()
    assert list(_rows(workdir / "a.csv")[0]) == ["k", "sigma_min", "sigma_max", "cond", "skipped"]


def test_plot_data_long_format(workdir):
    assert run(["cgo", "mollifier", "--eps-list", "1,2", "--rho-list", "80,160", "--plot-data"]) == 0
    wide = _rows(workdir / "moll.csv")
    long = _rows(workdir / "moll.long.csv")
    assert len(wide) == 4
    assert len(long) == 4 * 1
    assert list(long[0]) == ["epsilon", "rho_mag", "variable", "value"]
    assert {r["variable"] for r in long} == {"sup"}


def test_decay_columns(workdir):
    assert run(["cgo", "decay", "--n-grid", "128", "--p", "2"]) == 0
    rows = _rows(workdir / "decay.csv")
    assert list(rows[0]) == ["rho_mag", "p", "norm", "series_terms", "residual"]
    norms = [float(r["norm"]) for r in rows]
    assert all(b < a for a, b in zip(norms, norms[1:]))


def test_selftest_subset(workdir, capsys):
    assert run(["selftest", "--criterion", "4,5"]) == 0
    out = capsys.readouterr().out
    assert "criterion  4: PASS" in out and "criterion  5: PASS" in out
    assert [r["status"] for r in _rows(workdir / "selftest.csv")] == ["pass", "pass"]


def test_selftest_rejects_unknown_criterion(workdir):
    assert run(["selftest", "--criterion", "14"]) == 2


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(sorted(COMMANDS)), st.integers(0, 2**31), st.integers(1, 64), st.booleans())
def test_run_config_round_trip(command, seed, workers, plot):
    cfg = RunConfig(command, seed=seed, workers=workers, plot_data=plot)
    text = cfg.to_json()
    again = RunConfig.from_json(text)
    assert again == cfg
    assert again.to_json() == text
    assert json.loads(text)["params"].keys() == COMMANDS[command].keys()


def test_run_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        RunConfig.from_json(json.dumps({"command": "lt-check", "verbose": True}))
    with pytest.raises(ConfigError):
        RunConfig("lt-check", params={"dimension": 3})
    with pytest.raises(ConfigError):
        RunConfig.from_json("[1, 2]")
    with pytest.raises(ConfigError):
        RunConfig("lt-check", params={"dim": "three"})
