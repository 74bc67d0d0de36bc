"""FastAPI application wrapping the core package.

Keys and contexts live in an in-process registry: a context is precomputed
once and then serves any number of encrypt/aggregate calls, which is the
whole point of the incremental scheme. Benchmark runs execute synchronously
in the service process so their timings never include transport overhead.
"""

from __future__ import annotations

import threading
import uuid
from importlib.metadata import PackageNotFoundError, version as _pkg_version

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse

from .. import aggregate as agg
from ..backend import Ciphertext, SecretKey, keygen, SchemeParams
from ..bench import BenchConfig, BenchReport, OpCountModel, run as run_bench
from ..core import (
    IncheContext,
    build_context,
    inche_encrypt,
    randomization_smoke_test,
)
from ..errors import CorrectnessError, IncheError
from .models import (
    AggregateRequest,
    AggregateResponse,
    ContextCreateRequest,
    ContextInfo,
    DecryptRequest,
    DecryptResponse,
    EncryptRequest,
    EncryptResponse,
    HealthResponse,
    KeyCreateRequest,
    KeyInfo,
    SmokeRequest,
    SmokeResponse,
)

try:
    _VERSION = _pkg_version("inche")
except PackageNotFoundError:  # running from a source tree
    _VERSION = "0.0.0"


class _Registry:
    """Thread-safe in-memory stores for keys and contexts."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.keys: dict[str, tuple[SecretKey, KeyInfo]] = {}
        self.contexts: dict[str, tuple[IncheContext, ContextInfo]] = {}

    def add_key(self, key: SecretKey, info: KeyInfo) -> None:
        with self._lock:
            self.keys[info.key_id] = (key, info)

    def get_key(self, key_id: str) -> tuple[SecretKey, KeyInfo]:
        with self._lock:
            if key_id not in self.keys:
                raise HTTPException(status_code=404, detail=f"unknown key {key_id}")
            return self.keys[key_id]

    def add_context(self, ctx: IncheContext, info: ContextInfo) -> None:
        with self._lock:
            self.contexts[info.context_id] = (ctx, info)

    def get_context(self, context_id: str) -> tuple[IncheContext, ContextInfo]:
        with self._lock:
            if context_id not in self.contexts:
                raise HTTPException(
                    status_code=404, detail=f"unknown context {context_id}"
                )
            return self.contexts[context_id]


def create_app() -> FastAPI:
    app = FastAPI(
        title="inche",
        description="Incremental homomorphic encryption over cached pivots "
                    "and radix nuances, plus its benchmark harness.",
        version=_VERSION,
    )
    registry = _Registry()
    app.state.registry = registry

    @app.exception_handler(IncheError)
    async def _inche_error(request, exc: IncheError):
        status = 500 if isinstance(exc, CorrectnessError) else 400
        return JSONResponse(status_code=status,
                            content={"detail": f"{type(exc).__name__}: {exc}"})

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(version=_VERSION)

    @app.post("/keys", response_model=KeyInfo)
    def create_key(req: KeyCreateRequest) -> KeyInfo:
        params = SchemeParams(n_bits=req.n_bits, modulus_bits=req.modulus_bits,
                              seed=req.seed)
        key = keygen(params, scheme=req.backend)
        info = KeyInfo(
            key_id=uuid.uuid4().hex, scheme_id=key.scheme_id,
            backend=req.backend, n_bits=req.n_bits,
            modulus_bits=req.modulus_bits, probabilistic=key.probabilistic,
        )
        registry.add_key(key, info)
        return info

    @app.get("/keys/{key_id}", response_model=KeyInfo)
    def get_key(key_id: str) -> KeyInfo:
        return registry.get_key(key_id)[1]

    @app.post("/contexts", response_model=ContextInfo)
    def create_context(req: ContextCreateRequest) -> ContextInfo:
        key, key_info = registry.get_key(req.key_id)
        n_bits = req.n_bits if req.n_bits is not None else key_info.n_bits
        ctx = build_context(key, n_bits, req.pivots, budget=req.budget)
        info = ContextInfo(
            context_id=uuid.uuid4().hex, key_id=req.key_id,
            scheme_id=key.scheme_id, n_bits=n_bits,
            pivots_requested=req.pivots,
            pivots_cached=len(ctx.pivot_index.pivots),
            delta_p=ctx.delta_p,
            nuance_exponents=list(ctx.nuance_table.exponents),
            budget=req.budget, build_time_us=ctx.build_time_us,
            description=ctx.describe(),
        )
        registry.add_context(ctx, info)
        return info

    @app.get("/contexts/{context_id}", response_model=ContextInfo)
    def get_context(context_id: str) -> ContextInfo:
        return registry.get_context(context_id)[1]

    @app.post("/contexts/{context_id}/encrypt", response_model=EncryptResponse)
    def encrypt_values(context_id: str, req: EncryptRequest) -> EncryptResponse:
        ctx, _ = registry.get_context(context_id)
        before = ctx.op_counters.snapshot()
        ciphertexts = [f"{int(inche_encrypt(ctx, v).value):x}" for v in req.values]
        delta = ctx.op_counters.snapshot() - before
        return EncryptResponse(ciphertexts=ciphertexts,
                               op_counts=OpCountModel.from_snapshot(delta))

    @app.post("/contexts/{context_id}/decrypt", response_model=DecryptResponse)
    def decrypt_values(context_id: str, req: DecryptRequest) -> DecryptResponse:
        ctx, _ = registry.get_context(context_id)
        key = ctx.key
        values = []
        for h in req.ciphertexts:
            try:
                raw = int(h, 16)
            except ValueError:
                raise HTTPException(status_code=400,
                                    detail=f"not a hex ciphertext: {h!r}")
            values.append(key.decrypt(Ciphertext(raw, key.scheme_id, key.group)))
        return DecryptResponse(values=values)

    @app.post("/contexts/{context_id}/aggregate", response_model=AggregateResponse)
    def aggregate_values(context_id: str, req: AggregateRequest) -> AggregateResponse:
        ctx, _ = registry.get_context(context_id)
        before = ctx.op_counters.snapshot()
        ciphertexts = [inche_encrypt(ctx, v) for v in req.values]
        naive_ct = agg.naive_sum(ctx, ciphertexts)
        acc = agg.FrequencyAccumulator.for_context(ctx)
        agg.accumulate_all(acc, ctx, req.values)
        freq_ct = agg.finalize_sum(acc, ctx)
        delta = ctx.op_counters.snapshot() - before

        key = ctx.key
        naive_dec = key.decrypt(naive_ct)
        freq_dec = key.decrypt(freq_ct)
        resp = AggregateResponse(
            row_count=len(req.values),
            naive_ciphertext=f"{int(naive_ct.value):x}",
            frequency_ciphertext=f"{int(freq_ct.value):x}",
            decrypted_sum=freq_dec,
            methods_agree=naive_dec == freq_dec,
            op_counts=OpCountModel.from_snapshot(delta),
        )
        if req.values:
            average = agg.avg_from_sum(freq_dec, len(req.values))
            resp.avg_numerator = average.numerator
            resp.avg_denominator = average.denominator
        return resp

    @app.post("/contexts/{context_id}/smoke", response_model=SmokeResponse)
    def smoke(context_id: str, req: SmokeRequest) -> SmokeResponse:
        ctx, _ = registry.get_context(context_id)
        report = randomization_smoke_test(ctx, plaintext=req.plaintext,
                                          trials=req.trials)
        return SmokeResponse(
            scheme_id=report.scheme_id, trials=report.trials,
            plaintext=report.plaintext,
            fresh_all_distinct=report.fresh_all_distinct,
            cache_all_distinct=report.cache_all_distinct,
            composition_deterministic=report.composition_deterministic,
            caveat=report.caveat,
        )

    @app.post("/bench", response_model=BenchReport)
    def bench(config: BenchConfig) -> BenchReport:
        return run_bench(config)

    return app


app = create_app()
