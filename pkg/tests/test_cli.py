"""Tests for the command-line entry point."""

import pandas as pd
import pytest
import yaml

from cli import ExitCodes, main


@pytest.fixture
def write_config(tmp_path):
    def write(data) -> str:
        path = tmp_path / "config.yaml"
        path.write_text(yaml.safe_dump(data))
        return str(path)
    return write


def simulate_config():
    return {
        "schema_version": 1,
        "outcomes": ["a", "b", "c"],
        "types": ["x", "y"],
        "rules": [{"kind": "analogical", "name": "analogy", "alpha": [[1, 1], [1, 1], [1, 1]], "beta": 0.5}],
        "process": {"type_probabilities": [0.5, 0.5], "horizon": 200},
    }


def test_predict_writes_laplace_value(write_config, tmp_path, capsys):
    config = write_config({
        "schema_version": 1,
        "outcomes": ["H", "T"],
        "rules": [{"kind": "carnap", "alpha": [1, 1]}],
        "history": [["H", "type1"]] * 3,
    })
    out = tmp_path / "out"
    assert main(["predict", "--config", config, "--out", str(out)]) == ExitCodes.OK
    table = pd.read_csv(out / "predict.csv")
    assert table.loc[0, "pred_H"] == pytest.approx(0.8, abs=1e-15)
    assert "predict" in capsys.readouterr().out


def test_same_seed_gives_identical_bytes(write_config, tmp_path):
    config = write_config(simulate_config())
    for name in ("first", "second"):
        assert main(["simulate", "--config", config, "--seed", "7", "--out", str(tmp_path / name)]) == ExitCodes.OK
    first = (tmp_path / "first" / "simulate_analogy.csv").read_bytes()
    second = (tmp_path / "second" / "simulate_analogy.csv").read_bytes()
    assert first == second


def test_different_seeds_differ(write_config, tmp_path):
    config = write_config(simulate_config())
    main(["simulate", "--config", config, "--seed", "7", "--out", str(tmp_path / "a")])
    main(["simulate", "--config", config, "--seed", "8", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "simulate_analogy.csv").read_bytes() != (tmp_path / "b" / "simulate_analogy.csv").read_bytes()


def test_invalid_config_exit_code(write_config, tmp_path):
    data = simulate_config()
    data["schema_version"] = 2
    out = tmp_path / "out"
    assert main(["simulate", "--config", write_config(data), "--seed", "1", "--out", str(out)]) == ExitCodes.CONFIG_ERROR
    assert not out.exists()


@pytest.mark.parametrize("edit, field", [
    (lambda data: data["rules"][0].update(alpha="abc"), "rules.analogy"),
    (lambda data: data["process"].update(horizon="many"), "process.horizon"),
    (lambda data: data.update(history=[["a"]]), "history"),
])
def test_malformed_value_exit_code(write_config, tmp_path, caplog, edit, field):
    data = simulate_config()
    edit(data)
    out = tmp_path / "out"
    assert main(["simulate", "--config", write_config(data), "--seed", "1", "--out", str(out)]) == ExitCodes.CONFIG_ERROR
    assert field in caplog.text
    assert not out.exists()


def test_summary_names_the_task_once(write_config, tmp_path, capsys):
    data = simulate_config()
    data["audit"] = {"length": 3}
    assert main(["audit", "--config", write_config(data), "--out", str(tmp_path)]) == ExitCodes.OK
    line = capsys.readouterr().out
    assert line.count("audit:") == 1


def test_missing_seed_exit_code(write_config, tmp_path):
    assert main(["simulate", "--config", write_config(simulate_config()), "--out", str(tmp_path)]) == ExitCodes.CONFIG_ERROR


def test_resource_limit_exit_code(write_config, tmp_path):
    data = simulate_config()
    data["audit"] = {"length": 5, "max_nodes": 10}
    out = tmp_path / "out"
    assert main(["audit", "--config", write_config(data), "--out", str(out)]) == ExitCodes.RESOURCE_LIMIT
    assert not out.exists()


def test_audit_writes_csv_and_yaml(write_config, tmp_path):
    data = simulate_config()
    data["audit"] = {"length": 4}
    out = tmp_path / "out"
    assert main(["audit", "--config", write_config(data), "--out", str(out), "--tolerance", "1e-12"]) == ExitCodes.OK
    table = pd.read_csv(out / "audit.csv", float_precision="round_trip")
    assert set(table["tolerance"]) == {1e-12}
    records = yaml.safe_load((out / "audit.yaml").read_text())
    assert {r["postulate"] for r in records} >= {"partial_exchangeability", "generalized_partial_exchangeability"}


def test_unknown_task_is_a_usage_error(write_config):
    with pytest.raises(SystemExit):
        main(["plot", "--config", write_config(simulate_config())])
