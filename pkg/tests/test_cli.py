import json

import numpy as np
import pytest

from iovsim.charts import emit_charts
from iovsim.cli import EXIT_CONFIG, EXIT_OK, EXIT_USAGE, main, parse_seeds
from iovsim.metrics import COLUMNS, INDICATORS, MetricsSeries


def test_parse_seeds():
    assert parse_seeds("1..10") == list(range(1, 11))
    assert parse_seeds("3") == [3]
    assert parse_seeds("1,4,9") == [1, 4, 9]


def test_run_writes_csv_manifest_and_ledger(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--scenario", "default", "--seed", "1", "--out", str(out)]) == EXIT_OK
    lines = (out / "metrics.csv").read_text().splitlines()
    assert lines[0] == ",".join(COLUMNS)
    assert len(lines) == 301
    man = json.loads((out / "manifest.json").read_text())
    assert man["seeds"] == [1] and man["version"] and man["config"]["n_slots"] == 300
    assert (out / "tasks.csv").read_text().startswith("task_id,source,destination")


def test_manifest_replay_is_bit_exact(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--seed", "4", "--qos", "60", "--cache-scale", "0.5", "--out", str(a)]) == EXIT_OK
    assert main(["run", "--scenario", str(a / "manifest.json"), "--out", str(b)]) == EXIT_OK
    assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()


def test_sweep_outputs(tmp_path):
    out = tmp_path / "sw"
    code = main(["sweep", "--qos", "20,60,100", "--seeds", "1..2", "--out", str(out), "--charts"])
    assert code == EXIT_OK
    for q in (20, 60, 100):
        d = out / f"qos{q}"
        assert (d / "metrics.csv").exists()
        assert sorted(p.name for p in (d / "seeds").iterdir()) == ["seed_1.csv", "seed_2.csv"]
    assert sorted(p.name for p in (out / "charts").iterdir()) == sorted(f"{m}.svg" for m in INDICATORS)
    top = json.loads((out / "manifest.json").read_text())
    assert top["seeds"] == [1, 2] and top["grid"]["qos_mbps"] == [20.0, 60.0, 100.0]


def test_validate(tmp_path, capsys):
    assert main(["validate"]) == EXIT_OK
    bad = tmp_path / "bad.toml"
    bad.write_text("[scenario]\nslot_length = 0\n")
    assert main(["validate", "--scenario", str(bad)]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "slot_length" in err


@pytest.mark.parametrize("argv", [
    [],
    ["run", "--bogus"],
    ["run", "--qos", "20,60"],
    ["sweep", "--seeds", "5..1"],
    ["run", "--jobs", "0"],
    ["calibrate", "--target-loss", "1.5"],
])
def test_usage_errors(argv, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("IOVSIM_OUT", str(tmp_path))
    assert main(argv) == EXIT_USAGE
    assert capsys.readouterr().err


def test_config_error_for_bad_override(tmp_path, capsys):
    assert main(["sweep", "--vehicles", "-3", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_env_default_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("IOVSIM_OUT", str(tmp_path / "envout"))
    assert main(["run", "--seed", "2"]) == EXIT_OK
    assert (tmp_path / "envout" / "metrics.csv").exists()


def test_emit_charts(tmp_path):
    s = MetricsSeries.from_columns({c: np.linspace(0, 1, 10) for c in COLUMNS})
    paths = emit_charts({"one": s}, tmp_path)
    assert len(paths) == 5
    text = paths[0].read_text()
    assert text.lstrip().startswith("<?xml") and "one" in text
    with pytest.raises(ValueError):
        emit_charts({}, tmp_path)
