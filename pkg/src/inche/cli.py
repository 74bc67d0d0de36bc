"""``inche-bench``: benchmark workloads against the service or in-process.

Each workload subcommand builds a :class:`~inche.bench.BenchConfig`. With
``--server`` it is POSTed to a running service's ``/bench`` endpoint (the
workload executes server-side, so timings stay transport-free); without it
the same runner executes locally. Every flag can also be set through an
``INCHE_BENCH_*`` environment variable.
"""

from __future__ import annotations

import sys

import click
import httpx
from pydantic import ValidationError

from . import bench
from .errors import CorrectnessError, IncheError


def _parse_int_list(ctx, param, value):
    if value is None:
        return None
    try:
        return [int(tok) for tok in str(value).split(",") if tok != ""]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}")


def _parse_budgets(ctx, param, value):
    if value is None:
        return None
    out = []
    for tok in str(value).split(","):
        tok = tok.strip()
        if tok == "":
            continue
        if tok.lower() in ("full", "none"):
            out.append(None)
            continue
        try:
            out.append(int(tok))
        except ValueError:
            raise click.BadParameter(
                f"budget entries must be integers or 'full', got {tok!r}"
            )
    return out


_WORKLOAD_OPTIONS = [
    click.option("--source", type=click.Choice(["random", "csv", "psize"]),
                 default="random", envvar="INCHE_BENCH_SOURCE",
                 show_envvar=True, show_default=True,
                 help="Input column kind."),
    click.option("--path", default=None, envvar="INCHE_BENCH_PATH",
                 show_envvar=True, help="Input file for --source csv."),
    click.option("--column", type=int, default=0, envvar="INCHE_BENCH_COLUMN",
                 show_envvar=True, show_default=True,
                 help="Column index for --source csv."),
    click.option("--delimiter", default="|", envvar="INCHE_BENCH_DELIMITER",
                 show_envvar=True, show_default=True,
                 help="Field delimiter for --source csv."),
    click.option("--n-bits", type=int, default=32, envvar="INCHE_BENCH_N_BITS",
                 show_envvar=True, show_default=True,
                 help="Plaintext domain width in bits."),
    click.option("--rows", type=int, default=1024, envvar="INCHE_BENCH_ROWS",
                 show_envvar=True, show_default=True,
                 help="Number of values to process."),
    click.option("--pivots", callback=_parse_int_list, default="32",
                 envvar="INCHE_BENCH_PIVOTS", show_envvar=True,
                 show_default=True,
                 help="Pivot count, or comma list to sweep (encrypt workload)."),
    click.option("--budget", "budgets", callback=_parse_budgets, default=None,
                 envvar="INCHE_BENCH_BUDGET", show_envvar=True,
                 help="Nuance cache cap; comma list or 'full'. The limited "
                      "workload sweeps the list (default 0,1,2,4,full)."),
    click.option("--mode", type=click.Choice(["batch", "incremental", "both"]),
                 default="both", envvar="INCHE_BENCH_MODE", show_envvar=True,
                 show_default=True, help="Which encryption paths to time."),
    click.option("--backend", type=click.Choice(["paillier", "debug"]),
                 default="paillier", envvar="INCHE_BENCH_BACKEND",
                 show_envvar=True, show_default=True,
                 help="Homomorphic backend."),
    click.option("--modulus-bits", type=int, default=2048,
                 envvar="INCHE_BENCH_MODULUS_BITS", show_envvar=True,
                 show_default=True, help="Backend modulus size."),
    click.option("--reps", type=int, default=3, envvar="INCHE_BENCH_REPS",
                 show_envvar=True, show_default=True,
                 help="Measured repetitions (after one discarded warm-up)."),
    click.option("--seed", type=int, default=None, envvar="INCHE_BENCH_SEED",
                 show_envvar=True, help="Seed for data and key generation."),
    click.option("--step", type=int, default=10_000, envvar="INCHE_BENCH_STEP",
                 show_envvar=True, show_default=True,
                 help="Rows per aggregation step."),
    click.option("--workers", type=int, default=1, envvar="INCHE_BENCH_WORKERS",
                 show_envvar=True, show_default=True,
                 help="Parallel accumulator workers (aggregate workload)."),
    click.option("--out", default=None, envvar="INCHE_BENCH_OUT",
                 show_envvar=True, help="Write the report to this path."),
    click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
                 default="json", envvar="INCHE_BENCH_FORMAT", show_envvar=True,
                 show_default=True, help="Report file format."),
    click.option("--server", default=None, envvar="INCHE_BENCH_SERVER",
                 show_envvar=True,
                 help="Base URL of a running service; runs locally if unset."),
]


def _workload_options(f):
    for option in reversed(_WORKLOAD_OPTIONS):
        f = option(f)
    return f


def _build_config(workload: str, kw: dict) -> bench.BenchConfig:
    budgets = kw["budgets"]
    if budgets is None:
        budgets = [0, 1, 2, 4, None] if workload == "limited" else [None]
    try:
        return bench.BenchConfig(
            workload=workload,
            source=bench.SourceSpec(kind=kw["source"], path=kw["path"],
                                    column=kw["column"],
                                    delimiter=kw["delimiter"]),
            n_bits=kw["n_bits"], rows=kw["rows"], pivots=kw["pivots"],
            budgets=budgets, mode=kw["mode"], repetitions=kw["reps"],
            backend=kw["backend"], modulus_bits=kw["modulus_bits"],
            seed=kw["seed"], step=kw["step"], workers=kw["workers"],
            out=kw["out"], format=kw["fmt"],
        )
    except ValidationError as exc:
        raise click.UsageError(str(exc))


def _execute(config: bench.BenchConfig, server: str | None) -> bench.BenchReport:
    if server is None:
        return bench.run(config)
    resp = httpx.post(server.rstrip("/") + "/bench",
                      json=config.model_dump(mode="json"), timeout=None)
    if resp.status_code != 200:
        raise click.ClickException(
            f"service returned {resp.status_code}: {resp.text}"
        )
    return bench.BenchReport.model_validate(resp.json())


def _print_summary(report: bench.BenchReport) -> None:
    cfg = report.config
    click.echo(f"workload={report.workload} backend={cfg.backend} "
               f"n_bits={cfg.n_bits} rows={cfg.rows} reps={cfg.repetitions}")
    header = (f"{'series':<22} {'mean_ms':>12} {'stdev_ms':>10} "
              f"{'us/value':>10} {'build_us':>10} {'speedup':>8}")
    click.echo(header)
    for s in report.series:
        per_value = s.mean_us / cfg.rows if cfg.rows else 0.0
        speedup = f"{s.speedup:.2f}" if s.speedup is not None else "-"
        click.echo(f"{s.label:<22} {s.mean_us / 1000:>12.3f} "
                   f"{s.stdev_us / 1000:>10.3f} {per_value:>10.2f} "
                   f"{s.build_time_us:>10.1f} {speedup:>8}")
        ops = s.op_counts
        click.echo(f"{'':<22}   ops: he_add={ops.he_add} "
                   f"he_scalar_mul={ops.he_scalar_mul} "
                   f"fresh_encrypt={ops.fresh_encrypt}")
    if report.sums is not None:
        click.echo(f"sums: {report.sums}")
    if report.avg_numerator is not None:
        click.echo(f"avg: {report.avg_numerator}/{report.avg_denominator}")
    click.echo(f"correctness_ok={report.correctness_ok}")


def _run_workload(workload: str, kw: dict) -> None:
    config = _build_config(workload, kw)
    try:
        report = _execute(config, kw["server"])
    except CorrectnessError as exc:
        raise click.ClickException(f"correctness gate failed: {exc}")
    except IncheError as exc:
        raise click.ClickException(str(exc))
    _print_summary(report)
    if config.out:
        bench.write_report(report, config.out, config.format)
        click.echo(f"report written to {config.out} ({config.format})")


@click.group()
@click.version_option(package_name="inche")
def main() -> None:
    """Benchmark incremental homomorphic encryption workloads."""


@main.command()
@_workload_options
def encrypt(**kw) -> None:
    """Field encryption benchmark, batch against incremental."""
    _run_workload("encrypt", kw)


@main.command()
@_workload_options
def aggregate(**kw) -> None:
    """Encrypted column sum, per-row folding against frequency weighting."""
    _run_workload("aggregate", kw)


@main.command()
@_workload_options
def limited(**kw) -> None:
    """Memory-constrained encryption across a nuance-budget sweep."""
    _run_workload("limited", kw)


@main.command()
@click.option("--host", default="127.0.0.1", envvar="INCHE_BENCH_HOST",
              show_envvar=True, show_default=True)
@click.option("--port", type=int, default=8000, envvar="INCHE_BENCH_PORT",
              show_envvar=True, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("inche.service:app", host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
