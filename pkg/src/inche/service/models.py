"""Request/response models for the HTTP service.

Ciphertexts travel as lowercase hex strings: the values exceed what JSON
numbers can carry, and hex keeps them opaque and compact.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..bench import OpCountModel


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str


class KeyCreateRequest(BaseModel):
    backend: Literal["paillier", "debug"] = "paillier"
    n_bits: int = Field(default=32, ge=1, le=64)
    modulus_bits: int = 2048
    seed: Optional[int] = None


class KeyInfo(BaseModel):
    key_id: str
    scheme_id: str
    backend: str
    n_bits: int
    modulus_bits: int
    probabilistic: bool


class ContextCreateRequest(BaseModel):
    key_id: str
    n_bits: Optional[int] = None  # defaults to the key's domain
    pivots: int = Field(ge=1)
    budget: Optional[int] = Field(default=None, ge=0)


class ContextInfo(BaseModel):
    context_id: str
    key_id: str
    scheme_id: str
    n_bits: int
    pivots_requested: int
    pivots_cached: int
    delta_p: int
    nuance_exponents: list[int]
    budget: Optional[int]
    build_time_us: float
    description: str


class EncryptRequest(BaseModel):
    values: list[int]


class EncryptResponse(BaseModel):
    ciphertexts: list[str]
    op_counts: OpCountModel


class DecryptRequest(BaseModel):
    ciphertexts: list[str]


class DecryptResponse(BaseModel):
    values: list[int]


class AggregateRequest(BaseModel):
    values: list[int]


class AggregateResponse(BaseModel):
    row_count: int
    naive_ciphertext: str
    frequency_ciphertext: str
    decrypted_sum: int
    methods_agree: bool
    avg_numerator: Optional[int] = None
    avg_denominator: Optional[int] = None
    op_counts: OpCountModel


class SmokeRequest(BaseModel):
    plaintext: Optional[int] = None
    trials: int = Field(default=1000, ge=2)


class SmokeResponse(BaseModel):
    scheme_id: str
    trials: int
    plaintext: int
    fresh_all_distinct: bool
    cache_all_distinct: bool
    composition_deterministic: bool
    caveat: str
