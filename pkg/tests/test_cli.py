"""The inche-bench command: flags, env overrides, reports, exit codes."""

import json

import pytest
from click.testing import CliRunner

from inche.cli import main


@pytest.fixture
def runner():
    return CliRunner()


BASE = ["--backend", "debug", "--n-bits", "12", "--rows", "80",
        "--pivots", "8", "--seed", "1"]


class TestEncryptCommand:
    def test_prints_summary(self, runner):
        result = runner.invoke(main, ["encrypt", *BASE])
        assert result.exit_code == 0, result.output
        assert "batch" in result.output
        assert "incremental:p=8" in result.output
        assert "correctness_ok=True" in result.output

    def test_writes_json_report(self, runner, tmp_path):
        out = tmp_path / "r.json"
        result = runner.invoke(main, ["encrypt", *BASE, "--out", str(out)])
        assert result.exit_code == 0, result.output
        data = json.loads(out.read_text())
        assert data["workload"] == "encrypt"
        assert data["config"]["rows"] == 80

    def test_writes_csv_report(self, runner, tmp_path):
        out = tmp_path / "r.csv"
        result = runner.invoke(main, ["encrypt", *BASE, "--pivots", "2,4,8",
                                      "--out", str(out), "--format", "csv"])
        assert result.exit_code == 0, result.output
        lines = out.read_text().strip().split("\n")
        assert lines[0].startswith("schema_version,")
        assert len(lines) == 1 + 4  # header + batch + three pivot series

    def test_env_override(self, runner):
        result = runner.invoke(main, ["encrypt", *BASE],
                               env={"INCHE_BENCH_ROWS": "33"})
        assert result.exit_code == 0, result.output
        assert "rows=80" in result.output  # explicit flag beats env
        result = runner.invoke(
            main,
            ["encrypt", "--backend", "debug", "--n-bits", "12",
             "--pivots", "8", "--seed", "1"],
            env={"INCHE_BENCH_ROWS": "33"},
        )
        assert result.exit_code == 0, result.output
        assert "rows=33" in result.output

    def test_invalid_config_exits_nonzero(self, runner):
        result = runner.invoke(main, ["encrypt", "--rows", "-5",
                                      "--backend", "debug"])
        assert result.exit_code != 0

    def test_bad_pivots_string(self, runner):
        result = runner.invoke(main, ["encrypt", "--pivots", "two"])
        assert result.exit_code == 2


class TestAggregateCommand:
    def test_runs(self, runner):
        result = runner.invoke(main, ["aggregate", *BASE, "--step", "20"])
        assert result.exit_code == 0, result.output
        assert "naive_sum" in result.output
        assert "frequency_sum" in result.output
        assert "sums:" in result.output

    def test_csv_source(self, runner, tmp_path):
        from inche.dataio import write_column

        path = tmp_path / "col.tbl"
        write_column(str(path), [3, 1, 4, 1, 5])
        result = runner.invoke(main, [
            "aggregate", "--backend", "debug", "--n-bits", "8",
            "--source", "csv", "--path", str(path), "--rows", "5",
            "--pivots", "4", "--step", "2",
        ])
        assert result.exit_code == 0, result.output
        assert "'plaintext': 14" in result.output

    def test_missing_csv_file(self, runner):
        result = runner.invoke(main, [
            "aggregate", "--backend", "debug", "--source", "csv",
            "--path", "/nonexistent.tbl",
        ])
        assert result.exit_code == 1


class TestLimitedCommand:
    def test_explicit_budget_sweep(self, runner):
        result = runner.invoke(main, ["limited", *BASE,
                                      "--budget", "0,1,full"])
        assert result.exit_code == 0, result.output
        assert "budgeted:b=0" in result.output
        assert "budgeted:b=1" in result.output
        assert "budgeted:b=full" in result.output
        assert "budgeted:b=2" not in result.output

    def test_default_sweep_when_flag_omitted(self, runner):
        result = runner.invoke(main, ["limited", *BASE])
        assert result.exit_code == 0, result.output
        for label in ("b=0", "b=1", "b=2", "b=4", "b=full"):
            assert f"budgeted:{label}" in result.output

    def test_full_only(self, runner):
        result = runner.invoke(main, ["limited", *BASE, "--budget", "full"])
        assert result.exit_code == 0, result.output
        assert "budgeted:b=full" in result.output
        assert "budgeted:b=0" not in result.output

    def test_bad_budget_token(self, runner):
        result = runner.invoke(main, ["limited", *BASE, "--budget", "lots"])
        assert result.exit_code == 2


class TestServerMode:
    def test_posts_config_to_service(self, runner, monkeypatch):
        import httpx

        from inche import bench

        captured = {}
        real_run = bench.run

        def fake_post(url, json=None, timeout=None):
            captured["url"] = url
            report = real_run(bench.BenchConfig.model_validate(json))
            return httpx.Response(200, json=report.model_dump(mode="json"),
                                  request=httpx.Request("POST", url))

        monkeypatch.setattr(httpx, "post", fake_post)
        result = runner.invoke(main, ["encrypt", *BASE,
                                      "--server", "http://bench.local:8000"])
        assert result.exit_code == 0, result.output
        assert captured["url"] == "http://bench.local:8000/bench"
        assert "correctness_ok=True" in result.output

    def test_service_error_reported(self, runner, monkeypatch):
        import httpx

        def fake_post(url, json=None, timeout=None):
            return httpx.Response(400, text="ParameterError: nope",
                                  request=httpx.Request("POST", url))

        monkeypatch.setattr(httpx, "post", fake_post)
        result = runner.invoke(main, ["encrypt", *BASE, "--server",
                                      "http://bench.local:8000"])
        assert result.exit_code == 1
        assert "400" in result.output


def test_help_lists_workloads(runner):
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for command in ("encrypt", "aggregate", "limited", "serve"):
        assert command in result.output
