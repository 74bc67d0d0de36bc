"""Benchmark workloads, timing reports, and report serialization.

Three workloads, all desk-scale:

* ``encrypt``   -- per-field encryption, batch (one fresh encryption per
  value) against incremental (composition from the caches), optionally swept
  over several pivot counts;
* ``aggregate`` -- encrypted column total, per-row homomorphic folding
  against frequency-weighted combination of the caches, with cumulative
  timings per fixed-size step of rows;
* ``limited``   -- incremental encryption under a nuance-cache budget sweep,
  measuring how on-the-fly residual encryptions erode the advantage.

Methodology: monotonic clock, one discarded warm-up pass, at least three
measured repetitions, mean and standard deviation reported. Cache build time
is overhead, recorded separately and never folded into encryption time. A
decryption gate runs on sampled outputs before any timing is reported.
"""

from __future__ import annotations

import json
import statistics
import threading
import time
from io import StringIO
from typing import Callable, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from . import aggregate as agg
from .backend import SchemeParams, SecretKey, keygen
from .core import IncheContext, OpCounters, OpSnapshot, build_context, inche_encrypt
from .dataio import ColumnSource
from .errors import CorrectnessError, ParameterError

#: Outputs sampled by the pre-timing decryption gate on probabilistic
#: backends; the debug oracle is cheap enough to gate every value.
GATE_SAMPLE = 64

SCHEMA_VERSION = 1

CSV_FIELDS = [
    "schema_version", "workload", "backend", "n_bits", "rows", "label",
    "pivots", "budget", "repetitions", "mean_us", "stdev_us",
    "build_time_us", "he_add", "he_scalar_mul", "fresh_encrypt",
    "speedup", "correctness_ok",
]


class SourceSpec(BaseModel):
    """Where benchmark values come from; mirrors :class:`inche.dataio.ColumnSource`."""

    kind: Literal["random", "csv", "psize"] = "random"
    path: Optional[str] = None
    column: int = 0
    delimiter: str = "|"


class BenchConfig(BaseModel):
    """Full description of one benchmark run."""

    workload: Literal["encrypt", "aggregate", "limited"]
    source: SourceSpec = SourceSpec()
    n_bits: int = Field(default=32, ge=1, le=64)
    rows: int = Field(default=1024, ge=0)
    pivots: list[int] = Field(default_factory=lambda: [32])
    #: Nuance-cache caps, ``None`` meaning "uncapped". The limited workload
    #: measures one series per entry; the others use the first entry only.
    budgets: list[Optional[int]] = Field(default_factory=lambda: [None])
    mode: Literal["batch", "incremental", "both"] = "both"
    repetitions: int = Field(default=3, ge=1)
    backend: Literal["paillier", "debug"] = "paillier"
    modulus_bits: int = 2048
    seed: Optional[int] = None
    step: int = Field(default=10_000, ge=1)
    workers: int = Field(default=1, ge=1)
    out: Optional[str] = None
    format: Literal["json", "csv"] = "json"

    @model_validator(mode="after")
    def _check(self) -> "BenchConfig":
        if not self.pivots:
            raise ValueError("at least one pivot count is required")
        if any(p < 1 for p in self.pivots):
            raise ValueError("pivot counts must be >= 1")
        if any(b is not None and b < 0 for b in self.budgets):
            raise ValueError("budgets must be >= 0")
        if self.workload == "aggregate" and self.budgets != [None]:
            raise ValueError("the aggregate workload requires a full nuance cache")
        return self


class OpCountModel(BaseModel):
    """Homomorphic-operation tallies over one measured repetition."""

    he_add: int = 0
    he_scalar_mul: int = 0
    fresh_encrypt: int = 0

    @classmethod
    def from_snapshot(cls, snap: OpSnapshot | None) -> "OpCountModel":
        if snap is None:
            return cls()
        return cls(he_add=snap.he_add, he_scalar_mul=snap.he_scalar_mul,
                   fresh_encrypt=snap.fresh_encrypt)


class TimingSeries(BaseModel):
    """One timed configuration: per-repetition wall times plus statistics."""

    label: str
    pivots: Optional[int] = None
    budget: Optional[int] = None
    wall_times_us: list[float]
    mean_us: float
    stdev_us: float
    build_time_us: float = 0.0
    op_counts: OpCountModel = OpCountModel()
    #: Baseline mean divided by this series' mean (batch for encryption
    #: workloads, per-row folding for aggregation); > 1 means faster.
    speedup: Optional[float] = None


class StepTiming(BaseModel):
    """Cumulative aggregation time after each step of rows (means over reps)."""

    step: int
    rows: int
    naive_cum_us: float
    freq_cum_us: float


class BenchReport(BaseModel):
    """Machine-readable outcome of one benchmark run."""

    schema_version: int = SCHEMA_VERSION
    workload: str
    config: BenchConfig
    series: list[TimingSeries]
    steps: Optional[list[StepTiming]] = None
    finalize_us: Optional[float] = None
    sums: Optional[dict[str, int]] = None
    avg_numerator: Optional[int] = None
    avg_denominator: Optional[int] = None
    per_worker_us: Optional[list[float]] = None
    correctness_ok: bool
    notes: list[str] = Field(default_factory=list)


def _stats(times: list[float]) -> tuple[float, float]:
    mean = statistics.fmean(times) if times else 0.0
    stdev = statistics.stdev(times) if len(times) > 1 else 0.0
    return mean, stdev


def _timed_passes(fn: Callable[[], None], reps: int,
                  counters: OpCounters | None = None
                  ) -> tuple[list[float], OpSnapshot | None]:
    """Warm-up once (discarded), then time ``reps`` passes.

    Operation counts are deterministic per pass, so the delta of the first
    measured repetition stands for all of them.
    """
    fn()
    times: list[float] = []
    op_delta: OpSnapshot | None = None
    for k in range(reps):
        before = counters.snapshot() if k == 0 and counters is not None else None
        t0 = time.perf_counter_ns()
        fn()
        times.append((time.perf_counter_ns() - t0) / 1000.0)
        if before is not None:
            op_delta = counters.snapshot() - before
    return times, op_delta


def _series(label: str, times: list[float], *, pivots: int | None = None,
            budget: int | None = None, build_time_us: float = 0.0,
            op_counts: OpCountModel | None = None) -> TimingSeries:
    mean, stdev = _stats(times)
    return TimingSeries(
        label=label, pivots=pivots, budget=budget, wall_times_us=times,
        mean_us=mean, stdev_us=stdev, build_time_us=build_time_us,
        op_counts=op_counts or OpCountModel(),
    )


def _gate_sample(values: list[int], key: SecretKey) -> list[int]:
    if not key.probabilistic or len(values) <= GATE_SAMPLE:
        return values
    stride = max(1, len(values) // GATE_SAMPLE)
    return values[::stride][:GATE_SAMPLE]


def _correctness_gate(values: list[int], key: SecretKey,
                      ctx: IncheContext | None) -> int:
    """Round-trip sampled values through both paths before any timing."""
    sample = _gate_sample(values, key)
    for v in sample:
        if key.decrypt(key.encrypt(v)) != v:
            raise CorrectnessError(f"batch round-trip failed for value {v}")
        if ctx is not None and key.decrypt(inche_encrypt(ctx, v)) != v:
            raise CorrectnessError(f"incremental round-trip failed for value {v}")
    return len(sample)


def _make_key(cfg: BenchConfig) -> SecretKey:
    params = SchemeParams(n_bits=cfg.n_bits, modulus_bits=cfg.modulus_bits,
                          seed=cfg.seed)
    return keygen(params, scheme=cfg.backend)


def _load_values(cfg: BenchConfig) -> list[int]:
    src = ColumnSource(kind=cfg.source.kind, n_bits=cfg.n_bits,
                       row_count=cfg.rows, seed=cfg.seed,
                       path=cfg.source.path, column=cfg.source.column,
                       delimiter=cfg.source.delimiter)
    return src.load()


def run(cfg: BenchConfig) -> BenchReport:
    """Dispatch a benchmark config to its workload runner."""
    if cfg.workload == "encrypt":
        return run_encrypt_workload(cfg)
    if cfg.workload == "aggregate":
        return run_aggregate_workload(cfg)
    return run_limited_workload(cfg)


def run_encrypt_workload(cfg: BenchConfig) -> BenchReport:
    """Batch vs. incremental per-field encryption, swept over pivot counts."""
    values = _load_values(cfg)
    key = _make_key(cfg)
    series: list[TimingSeries] = []
    notes: list[str] = []
    batch_mean: float | None = None

    if cfg.mode in ("batch", "both"):
        def batch_pass() -> None:
            enc = key.encrypt
            for v in values:
                enc(v)

        gated = _correctness_gate(values, key, None)
        times, _ = _timed_passes(batch_pass, cfg.repetitions)
        batch = _series("batch", times,
                        op_counts=OpCountModel(fresh_encrypt=len(values)))
        batch_mean = batch.mean_us
        series.append(batch)
        notes.append(f"correctness gate: {gated} sampled batch round-trips")

    if cfg.mode in ("incremental", "both"):
        budget = cfg.budgets[0]
        for p in cfg.pivots:
            ctx = build_context(key, cfg.n_bits, p, budget=budget)
            gated = _correctness_gate(values, key, ctx)

            def inc_pass(ctx: IncheContext = ctx) -> None:
                for v in values:
                    inche_encrypt(ctx, v)

            times, ops = _timed_passes(inc_pass, cfg.repetitions, ctx.op_counters)
            s = _series(f"incremental:p={p}", times, pivots=p, budget=budget,
                        build_time_us=ctx.build_time_us,
                        op_counts=OpCountModel.from_snapshot(ops))
            if batch_mean and s.mean_us > 0:
                s.speedup = batch_mean / s.mean_us
            series.append(s)
            notes.append(
                f"p={p}: gate passed on {gated} values; "
                f"build overhead {ctx.build_time_us:.1f} us"
            )

    return BenchReport(workload="encrypt", config=cfg, series=series,
                       correctness_ok=True, notes=notes)


def _chunks(seq: list, size: int) -> list[list]:
    return [seq[k:k + size] for k in range(0, len(seq), size)]


def run_aggregate_workload(cfg: BenchConfig) -> BenchReport:
    """Per-row folding vs. frequency-weighted combination of one column sum."""
    values = _load_values(cfg)
    key = _make_key(cfg)
    p = cfg.pivots[0]
    ctx = build_context(key, cfg.n_bits, p, budget=None)
    _correctness_gate(values, key, ctx)

    ciphertexts = [inche_encrypt(ctx, v) for v in values]
    value_chunks = _chunks(values, cfg.step)
    cipher_chunks = _chunks(ciphertexts, cfg.step)
    n_steps = len(value_chunks)
    group = ctx.key.group

    naive_times: list[float] = []
    freq_times: list[float] = []
    finalize_times: list[float] = []
    naive_step_sums = [0.0] * n_steps
    freq_step_sums = [0.0] * n_steps
    naive_ct = freq_ct = None
    naive_ops = freq_ops = None

    for rep in range(cfg.repetitions + 1):  # first pass is the warm-up
        measured = rep > 0
        before = ctx.op_counters.snapshot()
        cum = 0.0
        running = None
        for idx, chunk in enumerate(cipher_chunks):
            t0 = time.perf_counter_ns()
            folded = agg.naive_sum(ctx, chunk)
            running = folded if running is None else agg.naive_sum(ctx, [running, folded])
            cum += (time.perf_counter_ns() - t0) / 1000.0
            if measured:
                naive_step_sums[idx] += cum
        if running is None:
            running = agg.naive_sum(ctx, [])
        if measured:
            naive_times.append(cum)
            if rep == 1:
                naive_ops = ctx.op_counters.snapshot() - before
        naive_ct = running

        before = ctx.op_counters.snapshot()
        acc = agg.FrequencyAccumulator.for_context(ctx)
        cum = 0.0
        for idx, chunk in enumerate(value_chunks):
            t0 = time.perf_counter_ns()
            agg.accumulate_all(acc, ctx, chunk)
            cum += (time.perf_counter_ns() - t0) / 1000.0
            if measured:
                freq_step_sums[idx] += cum
        t0 = time.perf_counter_ns()
        freq_ct = agg.finalize_sum(acc, ctx)
        fin = (time.perf_counter_ns() - t0) / 1000.0
        if measured:
            finalize_times.append(fin)
            freq_times.append(cum + fin)
            if rep == 1:
                freq_ops = ctx.op_counters.snapshot() - before

    plain_sum = sum(values)
    naive_sum_dec = key.decrypt(naive_ct)
    freq_sum_dec = key.decrypt(freq_ct)
    expected = plain_sum % key.plaintext_modulus
    if not (naive_sum_dec == freq_sum_dec == expected):
        raise CorrectnessError(
            f"aggregation mismatch: naive={naive_sum_dec} "
            f"frequency={freq_sum_dec} plaintext={expected}"
        )

    naive_series = _series("naive_sum", naive_times, pivots=p,
                           op_counts=OpCountModel.from_snapshot(naive_ops))
    freq_series = _series("frequency_sum", freq_times, pivots=p,
                          build_time_us=ctx.build_time_us,
                          op_counts=OpCountModel.from_snapshot(freq_ops))
    if naive_series.mean_us and freq_series.mean_us:
        freq_series.speedup = naive_series.mean_us / freq_series.mean_us

    steps = [
        StepTiming(step=i + 1,
                   rows=min((i + 1) * cfg.step, len(values)),
                   naive_cum_us=naive_step_sums[i] / max(1, cfg.repetitions),
                   freq_cum_us=freq_step_sums[i] / max(1, cfg.repetitions))
        for i in range(n_steps)
    ]

    finalize_mean, _ = _stats(finalize_times)
    notes = [
        f"decrypted sums agree with the plaintext oracle ({expected})",
        f"finalize_sum mean {finalize_mean:.1f} us over {cfg.repetitions} reps",
    ]

    per_worker_us = None
    if cfg.workers > 1:
        per_worker_us = _parallel_accumulate(cfg, ctx, values, expected)
        notes.append(f"parallel accumulate with {cfg.workers} workers agreed")

    row_count = len(values)
    report = BenchReport(
        workload="aggregate", config=cfg, series=[naive_series, freq_series],
        steps=steps, finalize_us=finalize_mean,
        sums={"plaintext": expected, "naive": naive_sum_dec,
              "frequency": freq_sum_dec},
        per_worker_us=per_worker_us, correctness_ok=True, notes=notes,
    )
    if row_count > 0:
        average = agg.avg_from_sum(plain_sum, row_count)
        report.avg_numerator = average.numerator
        report.avg_denominator = average.denominator
    return report


def _parallel_accumulate(cfg: BenchConfig, ctx: IncheContext,
                         values: list[int], expected: int) -> list[float]:
    """Per-worker accumulation with a merge; returns per-worker wall times."""
    slices = [values[k::cfg.workers] for k in range(cfg.workers)]
    accs = [agg.FrequencyAccumulator.for_context(ctx) for _ in slices]
    spans = [0.0] * cfg.workers

    def work(k: int) -> None:
        t0 = time.perf_counter_ns()
        agg.accumulate_all(accs[k], ctx, slices[k])
        spans[k] = (time.perf_counter_ns() - t0) / 1000.0

    threads = [threading.Thread(target=work, args=(k,)) for k in range(cfg.workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    merged = agg.FrequencyAccumulator.for_context(ctx)
    for a in accs:
        merged.merge(a)
    if agg.weighted_plaintext_sum(merged, ctx) % ctx.key.plaintext_modulus != expected:
        raise CorrectnessError("merged accumulator disagrees with plaintext sum")
    return spans


def run_limited_workload(cfg: BenchConfig) -> BenchReport:
    """Incremental encryption under the configured budget sweep, vs. batch."""
    values = _load_values(cfg)
    key = _make_key(cfg)
    p = cfg.pivots[0]
    budgets = cfg.budgets

    def batch_pass() -> None:
        enc = key.encrypt
        for v in values:
            enc(v)

    _correctness_gate(values, key, None)
    batch_times, _ = _timed_passes(batch_pass, cfg.repetitions)
    batch = _series("batch", batch_times,
                    op_counts=OpCountModel(fresh_encrypt=len(values)))
    series = [batch]
    notes: list[str] = []

    for budget in budgets:
        ctx = build_context(key, cfg.n_bits, p, budget=budget)
        _correctness_gate(values, key, ctx)

        def inc_pass(ctx: IncheContext = ctx) -> None:
            for v in values:
                inche_encrypt(ctx, v)

        times, ops = _timed_passes(inc_pass, cfg.repetitions, ctx.op_counters)
        label = f"budgeted:b={'full' if budget is None else budget}"
        s = _series(label, times, pivots=p, budget=budget,
                    build_time_us=ctx.build_time_us,
                    op_counts=OpCountModel.from_snapshot(ops))
        if batch.mean_us and s.mean_us > 0:
            s.speedup = batch.mean_us / s.mean_us
        series.append(s)
        fresh = s.op_counts.fresh_encrypt
        notes.append(f"{label}: {fresh} fresh encryptions over {len(values)} values")

    return BenchReport(workload="limited", config=cfg, series=series,
                       correctness_ok=True, notes=notes)


# ---------------------------------------------------------------------------
# Report serialization
# ---------------------------------------------------------------------------


def report_csv_rows(report: BenchReport) -> list[dict[str, object]]:
    """Flatten a report to one CSV row per timing series, stable field order."""
    rows = []
    for s in report.series:
        rows.append({
            "schema_version": report.schema_version,
            "workload": report.workload,
            "backend": report.config.backend,
            "n_bits": report.config.n_bits,
            "rows": report.config.rows,
            "label": s.label,
            "pivots": "" if s.pivots is None else s.pivots,
            "budget": "" if s.budget is None else s.budget,
            "repetitions": report.config.repetitions,
            "mean_us": f"{s.mean_us:.3f}",
            "stdev_us": f"{s.stdev_us:.3f}",
            "build_time_us": f"{s.build_time_us:.3f}",
            "he_add": s.op_counts.he_add,
            "he_scalar_mul": s.op_counts.he_scalar_mul,
            "fresh_encrypt": s.op_counts.fresh_encrypt,
            "speedup": "" if s.speedup is None else f"{s.speedup:.4f}",
            "correctness_ok": report.correctness_ok,
        })
    return rows


def render_report(report: BenchReport, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report.model_dump(mode="json"), indent=2) + "\n"
    if fmt == "csv":
        import csv as _csv

        buf = StringIO()
        writer = _csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(report_csv_rows(report))
        return buf.getvalue()
    raise ParameterError(f"unknown report format {fmt!r}")


def write_report(report: BenchReport, path: str, fmt: str = "json") -> None:
    """Persist a report; JSON carries the full structure, CSV the series table."""
    with open(path, "w") as handle:
        handle.write(render_report(report, fmt))
