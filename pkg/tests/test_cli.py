"""Tests for the command-line interface and its exit-code contract."""

import json

import pytest

from ktsim.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_VALIDATION, main
from ktsim.config import default_scenario


@pytest.fixture
def config_path(tmp_path):
    data = default_scenario().to_json()
    data.update({
        "name": "clitest",
        "m": 12,
        "tree_count": 2,
        "agents": {"count": 6, "coverage": 0.3, "accuracy": 0.85},
        "teams": {
            "experimenting": {"count": 1, "size": 2},
            "mining": {"count": 1, "size": 2},
            "labeling": {"count": 1, "size": 2},
        },
        "experiment": {"target_width": 5, "selection_prob": 0.5, "noise_rate": 0.1, "samples": 1000},
        "replicates": 2,
        "master_seed": 5,
    })
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return path


def test_missing_config_exits_3_with_the_path(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert main(["run", "--config", str(missing)]) == EXIT_IO
    assert str(missing) in capsys.readouterr().err


def test_invalid_config_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema": 1, "p_stay": 2.0}))
    assert main(["run", "--config", str(bad)]) == EXIT_CONFIG
    assert "p_stay" in capsys.readouterr().err


def test_malformed_json_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad)]) == EXIT_CONFIG
    capsys.readouterr()


def test_run_is_deterministic_across_invocations(config_path, tmp_path, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(config_path), "--seed", "42", "--out", str(out1)]) == EXIT_OK
    assert main(["run", "--config", str(config_path), "--seed", "42", "--out", str(out2)]) == EXIT_OK
    capsys.readouterr()
    assert (out1 / "result.json").read_bytes() == (out2 / "result.json").read_bytes()


def test_run_quiet_prints_nothing(config_path, tmp_path, capsys):
    code = main(["run", "--config", str(config_path), "--quiet", "--out", str(tmp_path / "q")])
    assert code == EXIT_OK
    out = capsys.readouterr()
    assert out.out == ""


def test_sweep_writes_csv_summary_and_per_run_files(config_path, tmp_path, capsys):
    out = tmp_path / "sweeps"
    code = main([
        "sweep", "--config", str(config_path), "--replicates", "2", "--out", str(out), "--quiet",
    ])
    assert code == EXIT_OK
    capsys.readouterr()
    target = out / "clitest"
    rows = (target / "sweep.csv").read_text().strip().splitlines()
    assert len(rows) == 1 + 8 * 2
    summary = json.loads((target / "summary.json").read_text())
    assert len(summary["per_combo"]) == 8
    assert (target / "combo0" / "rep0.json").is_file()
    assert (target / "combo7" / "rep1.json").is_file()


def test_sweep_refuses_nonempty_output_without_force(config_path, tmp_path, capsys):
    out = tmp_path / "sweeps"
    target = out / "clitest"
    target.mkdir(parents=True)
    (target / "stale.txt").write_text("leftover")
    code = main(["sweep", "--config", str(config_path), "--replicates", "1", "--out", str(out)])
    assert code == EXIT_IO
    assert "--force" in capsys.readouterr().err
    code = main([
        "sweep", "--config", str(config_path), "--replicates", "1", "--out", str(out),
        "--force", "--quiet",
    ])
    assert code == EXIT_OK
    capsys.readouterr()


def test_validate_default_labeler_passes(config_path, capsys):
    code = main([
        "validate", "--trials", "50", "--config", str(config_path), "--seed", "3", "--quiet",
    ])
    assert code == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["violations"] == 0
    assert payload["trials"] == 50
    assert payload["seed"] == 3


def test_validate_break_passthrough_exits_2_with_transcripts(config_path, capsys):
    code = main([
        "validate", "--trials", "50", "--config", str(config_path), "--seed", "3",
        "--break-passthrough",
    ])
    assert code == EXIT_VALIDATION
    captured = capsys.readouterr()
    payload = json.loads(captured.out)
    assert payload["violations"] > 0
    assert payload["break_passthrough"] is True
    assert payload["transcripts"]
    assert "violation" in captured.err


def test_validate_zero_trials_exits_1(capsys):
    assert main(["validate", "--trials", "0", "--seed", "1"]) == EXIT_CONFIG
    capsys.readouterr()


def test_oracle_reports_analytic_and_empirical(capsys):
    code = main([
        "oracle", "--p-stay", "0.9", "--dist", "1", "--delta", "0.0",
        "--samples", "100000", "--seed", "7", "--quiet",
    ])
    assert code == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["analytic"] == pytest.approx(0.8)
    assert abs(payload["empirical"] - payload["analytic"]) < 0.01
    assert payload["abs_diff"] < 0.01


def test_oracle_rejects_delta_half(capsys):
    assert main(["oracle", "--p-stay", "0.9", "--dist", "1", "--delta", "0.5"]) == EXIT_CONFIG
    capsys.readouterr()


def test_oracle_without_seed_prints_the_chosen_seed(capsys):
    code = main(["oracle", "--p-stay", "0.8", "--dist", "1", "--samples", "2000"])
    assert code == EXIT_OK
    captured = capsys.readouterr()
    payload = json.loads(captured.out)
    assert "seed" in payload
    assert str(payload["seed"]) in captured.err


def test_unknown_arguments_exit_1(capsys):
    assert main(["run", "--bogus"]) == EXIT_CONFIG
    capsys.readouterr()


def test_quiet_output_of_validate_is_pure_json(config_path, capsys):
    main(["validate", "--trials", "20", "--config", str(config_path), "--seed", "9", "--quiet"])
    captured = capsys.readouterr()
    json.loads(captured.out)  # must not raise
    assert captured.err == ""
