import csv
import json
import subprocess
import sys

import pytest

from decaylab import cli_runner
from decaylab.cli_runner import COMMANDS, main, render_csv, validate
from decaylab.errors import ConfigError


def write_config(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0], list(csv.DictReader(lines[1:]))


def test_schema_covers_every_command():
    schema = cli_runner._schema()
    assert schema["schema_version"] == cli_runner.SCHEMA_VERSION
    assert set(schema["commands"]) == set(COMMANDS)


def test_validate_merges_defaults_and_rejects_unknown():
    p = validate("e-sin", {"a": -3.0})
    assert p == {"a": -3.0, "b": -1.0}
    with pytest.raises(ConfigError):
        validate("e-sin", {"c": 1})
    with pytest.raises(ConfigError):
        validate("e-sin", {"a": "minus three"})
    with pytest.raises(ConfigError):
        validate("oscint", {"xi": 1.0, "t": 1.0})
    with pytest.raises(ConfigError):
        validate("e-sin", [1, 2])
    with pytest.raises(ConfigError):
        validate("no-such-command", {})


@pytest.mark.parametrize("text", ["{not json", json.dumps({"bogus": 1}), json.dumps({"a": {"nested": 1}})])
def test_bad_config_exits_4_without_outputs(tmp_path, capsys, text):
    out = tmp_path / "out"
    code = main(["e-sin", "--config", write_config(tmp_path, text), "--out", str(out)])
    assert code == 4
    assert not out.exists()
    assert "error" in capsys.readouterr().err


def test_run_writes_json_and_csv(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["e-sin", "--config", write_config(tmp_path, {}), "--out", str(out)]) == 0
    assert "e-sin: ok" in capsys.readouterr().out
    report = json.loads((out / "e-sin.json").read_text())
    assert report["frozen_constants_version"] == cli_runner.constants.version()
    assert report["config"] == {"a": -2.0, "b": -1.0, "seed": 0}
    header, rows = read_csv(out / "e-sin.csv")
    assert header == "# decaylab-csv schema=1 command=e-sin"
    assert list(rows[0]) == cli_runner._schema()["commands"]["e-sin"]
    assert float(rows[0]["integral"]) == pytest.approx(-1.3718343685435312, rel=1e-15)
    assert not list(out.glob(".*"))


def test_runs_are_byte_identical(tmp_path):
    cfg = write_config(tmp_path, {"count": 3, "num_points": 512, "half_length": 20.0})
    for name in ("a", "b"):
        assert main(["leibniz-scan", "--config", cfg, "--out", str(tmp_path / name)]) == 0
    for ext in ("json", "csv"):
        assert ((tmp_path / "a" / f"leibniz-scan.{ext}").read_bytes()
                == (tmp_path / "b" / f"leibniz-scan.{ext}").read_bytes())


def test_seed_flag_overrides_config(tmp_path):
    cfg = write_config(tmp_path, {"count": 2, "num_points": 512, "half_length": 20.0, "seed": 1})
    main(["leibniz-scan", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["leibniz-scan", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "2"])
    a = json.loads((tmp_path / "a" / "leibniz-scan.json").read_text())
    b = json.loads((tmp_path / "b" / "leibniz-scan.json").read_text())
    assert a["config"]["seed"] == 1 and b["config"]["seed"] == 2
    assert a["results"]["max_ratio"] != b["results"]["max_ratio"]


def test_accuracy_failure_exits_2(tmp_path):
    cfg = write_config(tmp_path, {"num_points": 1024, "half_length": 128.0, "t": 8.0})
    assert main(["finite-bound", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_blow_up_exits_3(tmp_path):
    cfg = write_config(tmp_path, {"k": 4, "initial": "Gaussian", "amplitude": 6.0, "num_points": 512,
                                  "half_length": 20.0, "t_end": 1.0})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_domain_error_exits_1(tmp_path):
    cfg = write_config(tmp_path, {"a": -1.0, "b": -2.0})
    assert main(["e-sin", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


def test_solve_saves_trajectory(tmp_path):
    cfg = write_config(tmp_path, {"t_end": 0.05, "save_trajectory": True})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "trajectory.npz").exists()
    _, rows = read_csv(tmp_path / "o" / "solve.csv")
    assert float(rows[-1]["t"]) == pytest.approx(0.05)


def test_sweep_of_one_equals_run(tmp_path):
    cfg = write_config(tmp_path, {"b": -1.0})
    main(["e-sin", "--config", write_config(tmp_path, {"a": -4.0, "b": -1.0}, "one.json"),
          "--out", str(tmp_path / "run")])
    assert main(["sweep", "e-sin", "--config", cfg, "--axis", "a", "--values", "-4.0",
                 "--out", str(tmp_path / "sw")]) == 0
    _, run_rows = read_csv(tmp_path / "run" / "e-sin.csv")
    _, sweep_rows = read_csv(tmp_path / "sw" / "e-sin_sweep.csv")
    assert sweep_rows == run_rows


def test_sweep_dedup_and_workers(tmp_path, capsys, monkeypatch):
    cfg = write_config(tmp_path, {})
    assert main(["sweep", "e-sin", "--config", cfg, "--axis", "a", "--values=-3,-4,-3",
                 "--out", str(tmp_path / "one")]) == 0
    assert "duplicate" in capsys.readouterr().err
    monkeypatch.setenv(cli_runner.WORKERS_ENV, "2")
    assert main(["sweep", "e-sin", "--config", cfg, "--axis", "a", "--values=-3,-4",
                 "--out", str(tmp_path / "two")]) == 0
    assert ((tmp_path / "one" / "e-sin_sweep.csv").read_bytes()
            == (tmp_path / "two" / "e-sin_sweep.csv").read_bytes())


def test_sweep_rejects_unknown_axis(tmp_path):
    cfg = write_config(tmp_path, {})
    assert main(["sweep", "e-sin", "--config", cfg, "--axis", "zz", "--values", "1"]) == 4
    assert main(["sweep", "e-sin", "--config", cfg]) == 4


def test_sweep_failure_reports_values(tmp_path, capsys):
    cfg = write_config(tmp_path, {"b": -1.0})
    assert main(["sweep", "e-sin", "--config", cfg, "--axis", "a", "--values=-2,-0.5",
                 "--out", str(tmp_path / "o")]) == 1
    assert "a=-0.5" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_number_format():
    text = render_csv("e-sin", [{"a": 0.1, "b": -1, "integral": 1 / 3, "bound": 2.0, "ratio": True}])
    row = text.splitlines()[2].split(",")
    assert row[0] == "0.10000000000000001" and row[2] == "0.33333333333333331" and row[1] == "-1"


def test_console_entry_point(tmp_path):
    cfg = write_config(tmp_path, {})
    proc = subprocess.run([sys.executable, "-m", "decaylab.cli_runner", "e-sin", "--config", cfg,
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0 and "ok" in proc.stdout
