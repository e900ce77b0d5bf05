"""Command-line interface behavior and exit codes."""

import csv

import pytest

from rslab.cli import EXIT_CONFIG, EXIT_OK, main

SMALL_CONFIG = """
replications = 6
base_seed = 99
policies = ["EQUAL", "OCBA"]
tracked_designs = [2]

[problem]
kind = "normal_designs"
means = [0.0, 2.0]
sds = [1.0, 1.0]

[run]
budget = 30
n0 = 3
"""


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL_CONFIG, encoding="utf-8")
    return path


class TestRunCurves:
    def test_writes_csv(self, tmp_path, config_path, capsys):
        out = tmp_path / "curves.csv"
        code = main(["run-curves", "--config", str(config_path), "--out", str(out)])
        assert code == EXIT_OK
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["policy", "budget", "pcs", "eoc", "design", "alloc_frac"]
        assert len(rows) > 1
        assert "wrote" in capsys.readouterr().out

    def test_worker_counts_are_byte_identical(self, tmp_path, config_path):
        out1 = tmp_path / "w1.csv"
        out2 = tmp_path / "w2.csv"
        assert main(["run-curves", "--config", str(config_path), "--out", str(out1)]) == EXIT_OK
        assert main([
            "run-curves", "--config", str(config_path), "--out", str(out2), "--workers", "3",
        ]) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()

    def test_config_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("replications = 0", encoding="utf-8")
        out = tmp_path / "x.csv"
        assert main(["run-curves", "--config", str(bad), "--out", str(out)]) == EXIT_CONFIG
        assert main(["run-curves", "--config", str(tmp_path / "none.toml"), "--out", str(out)]) == EXIT_CONFIG


class TestRunTable:
    def test_writes_table(self, tmp_path, config_path):
        out = tmp_path / "table.csv"
        code = main([
            "run-table", "--config", str(config_path), "--targets", "0.5,1.1", "--out", str(out),
        ])
        assert code == EXIT_OK
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["policy", "target_pcs", "budget"]
        assert len(rows) == 5
        assert any(r[2] == "not reached" for r in rows[1:])

    def test_bad_targets_exit_config(self, tmp_path, config_path):
        out = tmp_path / "table.csv"
        assert main([
            "run-table", "--config", str(config_path), "--targets", "abc", "--out", str(out),
        ]) == EXIT_CONFIG


class TestSolveOptimal:
    def test_prints_alpha_and_residuals(self, capsys):
        code = main(["solve-optimal", "--means", "1,2", "--sds", "3,1"])
        assert code == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "quantity,design,value"
        values = {}
        for line in lines[1:]:
            quantity, design, value = line.split(",")
            values[(quantity, design)] = float(value)
        assert values[("alpha_star", "1")] == pytest.approx(0.75, abs=1e-10)
        assert values[("alpha_star", "2")] == pytest.approx(0.25, abs=1e-10)
        assert abs(values[("balance", "")]) <= 1e-10
        assert values[("max_rate_gap", "")] <= 1e-10

    def test_counts_residuals_reported(self, capsys):
        code = main([
            "solve-optimal", "--means", "1,2,3", "--sds", "2,2,2", "--counts", "10,10,10",
        ])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "alpha_input,1,0.3333333333" in out
        assert "max_rate_gap,,1.2" in out

    def test_argument_validation(self, capsys):
        assert main(["solve-optimal", "--means", "1,2", "--sds", "1"]) == EXIT_CONFIG
        assert main(["solve-optimal", "--means", "1,2", "--sds", "1,x"]) == EXIT_CONFIG
        # Non-unique best is a domain error surfaced as a config problem.
        assert main(["solve-optimal", "--means", "2,2", "--sds", "1,1"]) == EXIT_CONFIG
        assert main([
            "solve-optimal", "--means", "1,2", "--sds", "1,1", "--counts", "1,2,3",
        ]) == EXIT_CONFIG
