"""End-to-end tests of the command-line interface and its exit codes."""

import json
import subprocess
import sys

import pytest

from slmarkov.channel import ScenarioSpec, Segment, scenario_to_json
from slmarkov.cli import EXIT_CONFIG, EXIT_DATA, EXIT_IO, EXIT_OK, main
from slmarkov.delays import synthetic_delay_trace
from slmarkov.report import read_report_csv


@pytest.fixture()
def small_spec_file(tmp_path):
    spec = ScenarioSpec(
        num_states=2,
        segments=(
            Segment(start=0, matrix=[[0.9, 0.1], [0.5, 0.5]]),
            Segment(start=1000, matrix=[[0.6, 0.4], [0.5, 0.5]]),
        ),
        total_packets=2000,
        seed=11,
    )
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario_to_json(spec)))
    return path


class TestSimulate:
    def test_deterministic_output(self, small_spec_file, tmp_path):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        args = ["simulate", "--spec", str(small_spec_file), "--seed", "5"]
        assert main(args + ["--out", str(out1)]) == EXIT_OK
        assert main(args + ["--out", str(out2)]) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()
        assert len(out1.read_text().splitlines()) == 2001

    def test_invalid_matrix_is_config_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(
            json.dumps(
                {
                    "num_states": 2,
                    "total_packets": 100,
                    "segments": [{"start": 0, "matrix": [[0.9, 0.2], [0.5, 0.5]]}],
                }
            )
        )
        code = main(["simulate", "--spec", str(bad), "--out", str(tmp_path / "t.csv")])
        assert code == EXIT_CONFIG
        assert "error" in capsys.readouterr().err

    def test_scenario_required(self, tmp_path):
        assert main(["simulate", "--out", str(tmp_path / "t.csv")]) == EXIT_CONFIG

    def test_spec_and_builtin_conflict(self, small_spec_file, tmp_path):
        code = main(
            [
                "simulate",
                "--spec",
                str(small_spec_file),
                "--paper-scenario",
                "--out",
                str(tmp_path / "t.csv"),
            ]
        )
        assert code == EXIT_CONFIG


class TestIdentify:
    def run_simulate(self, spec_file, tmp_path):
        trace = tmp_path / "trace.csv"
        assert main(["simulate", "--spec", str(spec_file), "--out", str(trace)]) == EXIT_OK
        return trace

    def test_report_rows_and_figures(self, small_spec_file, tmp_path, capsys):
        trace = self.run_simulate(small_spec_file, tmp_path)
        report = tmp_path / "report.csv"
        code = main(
            [
                "identify",
                str(trace),
                "--spec",
                str(small_spec_file),
                "--out",
                str(report),
            ]
        )
        assert code == EXIT_OK
        parsed = read_report_csv(report)
        assert len(parsed.rows) == 20
        assert parsed.rows[0].truth is not None
        assert (tmp_path / "report_estimates.png").exists()
        assert (tmp_path / "report_uncertainty.png").exists()
        out = capsys.readouterr().out
        assert "rmse identified" in out
        assert "jump at window" in out

    def test_no_plot_skips_figures(self, small_spec_file, tmp_path):
        trace = self.run_simulate(small_spec_file, tmp_path)
        report = tmp_path / "quiet.csv"
        code = main(["identify", str(trace), "--out", str(report), "--no-plot"])
        assert code == EXIT_OK
        assert not (tmp_path / "quiet_estimates.png").exists()

    def test_partial_window_warning(self, small_spec_file, tmp_path, capsys):
        trace = self.run_simulate(small_spec_file, tmp_path)
        code = main(
            ["identify", str(trace), "--out", str(tmp_path / "r.csv"), "--window", "300", "--no-plot"]
        )
        assert code == EXIT_OK
        assert "partial window" in capsys.readouterr().err

    def test_missing_trace_is_io_error(self, tmp_path):
        code = main(["identify", str(tmp_path / "nope.csv"), "--no-plot"])
        assert code == EXIT_IO

    def test_malformed_trace_is_data_error(self, tmp_path, capsys):
        trace = tmp_path / "trace.csv"
        trace.write_text("packet_index,state\n0,1\n1,banana\n")
        code = main(["identify", str(trace), "--no-plot"])
        assert code == EXIT_DATA
        assert ":3" in capsys.readouterr().err

    def test_flag_overrides_config_file(self, small_spec_file, tmp_path):
        trace = self.run_simulate(small_spec_file, tmp_path)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"identifier": {"window_len": 200}}))
        report = tmp_path / "r.csv"
        code = main(
            [
                "identify",
                str(trace),
                "--config",
                str(cfg),
                "--window",
                "100",
                "--out",
                str(report),
                "--no-plot",
            ]
        )
        assert code == EXIT_OK
        assert len(read_report_csv(report).rows) == 20  # flag wins over config

    def test_config_file_applies_without_flag(self, small_spec_file, tmp_path):
        trace = self.run_simulate(small_spec_file, tmp_path)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"identifier": {"window_len": 200}}))
        report = tmp_path / "r.csv"
        code = main(
            ["identify", str(trace), "--config", str(cfg), "--out", str(report), "--no-plot"]
        )
        assert code == EXIT_OK
        assert len(read_report_csv(report).rows) == 10

    def test_unknown_config_key_rejected(self, small_spec_file, tmp_path):
        trace = self.run_simulate(small_spec_file, tmp_path)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"identifier": {"window_size": 200}}))
        code = main(["identify", str(trace), "--config", str(cfg), "--no-plot"])
        assert code == EXIT_CONFIG


class TestDelays:
    def test_synthetic_run(self, tmp_path, capsys):
        out = tmp_path / "states.csv"
        code = main(
            ["delays", "--synthetic", "800", "--seed", "3", "--out", str(out), "--no-plot"]
        )
        assert code == EXIT_OK
        assert out.exists()
        report = read_report_csv(tmp_path / "states_report.csv")
        assert report.num_states == 3
        assert len(report.rows) == 8
        for row in report.rows:
            assert row.transition.sum(axis=1) == pytest.approx([1, 1, 1], abs=1e-6)

    def test_delay_file_run(self, tmp_path):
        records, _ = synthetic_delay_trace(600, seed=9)
        delays = tmp_path / "delays.csv"
        with open(delays, "w", newline="") as handle:
            handle.write("packet_index,delay_ms\n")
            for rec in records:
                handle.write(f"{rec.packet_index},{rec.delay:.6f}\n")
        code = main(
            ["delays", str(delays), "--out", str(tmp_path / "states.csv"), "--no-plot"]
        )
        assert code == EXIT_OK
        lines = (tmp_path / "states.csv").read_text().splitlines()
        assert len(lines) == 601

    def test_input_required(self, tmp_path):
        assert main(["delays", "--out", str(tmp_path / "s.csv"), "--no-plot"]) == EXIT_CONFIG

    def test_missing_delay_file_is_io_error(self, tmp_path):
        code = main(
            ["delays", str(tmp_path / "none.csv"), "--out", str(tmp_path / "s.csv"), "--no-plot"]
        )
        assert code == EXIT_IO

    def test_file_and_synthetic_conflict(self, tmp_path):
        delays = tmp_path / "delays.csv"
        delays.write_text("packet_index,delay_ms\n0,20.0\n")
        code = main(
            ["delays", str(delays), "--synthetic", "10", "--out", str(tmp_path / "s.csv")]
        )
        assert code == EXIT_CONFIG


class TestCompare:
    def make_report(self, small_spec_file, tmp_path):
        trace = tmp_path / "trace.csv"
        report = tmp_path / "report.csv"
        assert main(["simulate", "--spec", str(small_spec_file), "--out", str(trace)]) == EXIT_OK
        assert (
            main(
                [
                    "identify",
                    str(trace),
                    "--spec",
                    str(small_spec_file),
                    "--out",
                    str(report),
                    "--no-plot",
                ]
            )
            == EXIT_OK
        )
        return report

    def test_metrics_printed(self, small_spec_file, tmp_path, capsys):
        report = self.make_report(small_spec_file, tmp_path)
        capsys.readouterr()
        code = main(["compare", str(report), "--jumps", "1000", "--window", "100"])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "rmse identified" in out
        assert "rmse classical" in out
        assert "jump at window 10" in out

    def test_summary_file(self, small_spec_file, tmp_path):
        report = self.make_report(small_spec_file, tmp_path)
        summary = tmp_path / "summary.csv"
        code = main(["compare", str(report), "--out", str(summary)])
        assert code == EXIT_OK
        text = summary.read_text()
        assert "rmse_identified_p11" in text
        assert "reset_window_count" in text

    def test_no_truth_report(self, tmp_path, capsys):
        out = tmp_path / "states.csv"
        main(["delays", "--synthetic", "500", "--out", str(out), "--no-plot"])
        capsys.readouterr()
        code = main(["compare", str(tmp_path / "states_report.csv")])
        assert code == EXIT_OK
        assert "no ground truth" in capsys.readouterr().out

    def test_bad_jumps_flag(self, small_spec_file, tmp_path):
        report = self.make_report(small_spec_file, tmp_path)
        assert main(["compare", str(report), "--jumps", "12,potato"]) == EXIT_CONFIG

    def test_missing_report_is_io_error(self, tmp_path):
        assert main(["compare", str(tmp_path / "none.csv")]) == EXIT_IO


class TestModuleEntry:
    def test_python_dash_m(self, small_spec_file, tmp_path):
        out = tmp_path / "t.csv"
        result = subprocess.run(
            [
                sys.executable,
                "-m",
                "slmarkov",
                "simulate",
                "--spec",
                str(small_spec_file),
                "--out",
                str(out),
            ],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0, result.stderr
        assert out.exists()

    def test_help(self):
        result = subprocess.run(
            [sys.executable, "-m", "slmarkov", "--help"], capture_output=True, text=True
        )
        assert result.returncode == 0
        for sub in ["simulate", "identify", "delays", "compare"]:
            assert sub in result.stdout
