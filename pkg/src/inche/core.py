"""Incremental encryption from cached pivots and radix nuances.

A context precomputes two small ciphertext caches over the plaintext domain
``[0, 2**n_bits)``:

* *pivots* -- ``p`` equally spaced anchor plaintexts ``P_i = i * delta_p``
  with their encryptions, splitting the domain into half-open gaps
  ``[P_i, P_{i+1})`` of width ``delta_p = ceil(2**n_bits / p)``;
* *nuances* -- encryptions of the radix plaintexts ``2**j`` for
  ``j = 0 .. ceil(log2 delta_p) - 1``, enough to write any in-gap offset as a
  subset sum of radixes.

Encrypting a value then costs no fresh encryption at all: look up the gap,
take the binary expansion of ``val - P_i``, and fold the cached ciphertexts
together with homomorphic addition. When the nuance cache is capped
(``budget``), radixes that fell outside the cap are summed in plaintext and
encrypted freshly as one residual ciphertext per value.

Composed ciphertexts are deterministic per plaintext for a fixed cache:
encrypting the same value twice yields the same bytes, so repeated field
values are visible as repeated ciphertexts. :func:`randomization_smoke_test`
detects and flags this; see the README's security notes.
"""

from __future__ import annotations

import threading
import time
from bisect import bisect_right
from dataclasses import dataclass

from .backend import Ciphertext, SecretKey
from .errors import ParameterError, PlaintextRangeError


@dataclass(frozen=True)
class OpSnapshot:
    """Point-in-time operation tallies; subtract two to get an interval."""

    he_add: int = 0
    he_scalar_mul: int = 0
    fresh_encrypt: int = 0

    def __sub__(self, other: "OpSnapshot") -> "OpSnapshot":
        return OpSnapshot(
            self.he_add - other.he_add,
            self.he_scalar_mul - other.he_scalar_mul,
            self.fresh_encrypt - other.fresh_encrypt,
        )


class OpCounters:
    """Contention-safe tallies of homomorphic ops and fresh encryptions."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._he_add = 0
        self._he_scalar_mul = 0
        self._fresh_encrypt = 0

    def add_many(self, he_add: int = 0, he_scalar_mul: int = 0,
                 fresh_encrypt: int = 0) -> None:
        with self._lock:
            self._he_add += he_add
            self._he_scalar_mul += he_scalar_mul
            self._fresh_encrypt += fresh_encrypt

    def snapshot(self) -> OpSnapshot:
        with self._lock:
            return OpSnapshot(self._he_add, self._he_scalar_mul, self._fresh_encrypt)


@dataclass(frozen=True)
class PivotIndex:
    """Sorted pivot plaintexts with their cached ciphertexts.

    ``pivots[i] = i * delta_p``; a trailing pivot that would land at or above
    ``2**n_bits`` is never materialized, so every pivot is a valid plaintext
    and every domain value falls in exactly one gap.
    """

    n_bits: int
    delta_p: int
    pivots: tuple[int, ...]
    cached: tuple[Ciphertext, ...]
    uniform: bool

    def lookup_index(self, val: int) -> int:
        """Index of the largest pivot ``P_i`` with ``P_i <= val``."""
        if not 0 <= val < (1 << self.n_bits):
            raise PlaintextRangeError(
                f"value {val} outside domain [0, 2**{self.n_bits})"
            )
        if self.uniform:
            return val // self.delta_p
        # Fallback for non-uniform pivot sets: rightmost pivot <= val.
        return bisect_right(self.pivots, val) - 1


@dataclass(frozen=True)
class NuanceTable:
    """Cached encryptions of radix plaintexts ``2**j``, keyed by exponent.

    ``full_exponent_count`` is ``ceil(log2 delta_p)``, the number of radixes
    needed to cover every offset in ``[0, delta_p)``; ``entries`` holds the
    lowest ``min(full_exponent_count, budget)`` of them.
    """

    entries: dict[int, Ciphertext]
    budget: int | None
    full_exponent_count: int

    @property
    def exponents(self) -> tuple[int, ...]:
        return tuple(sorted(self.entries))

    @property
    def radixes(self) -> tuple[int, ...]:
        """The cached radix plaintexts themselves (``2**j``)."""
        return tuple(1 << j for j in self.exponents)

    @property
    def complete(self) -> bool:
        return len(self.entries) == self.full_exponent_count


@dataclass(frozen=True)
class Decomposition:
    """Exact split ``val = pivots[pivot_index] + sum(2**j for j in offset_bits)``."""

    pivot_index: int
    offset_bits: frozenset[int]


class IncheContext:
    """A key plus its precomputed pivot and nuance caches.

    Immutable after construction except for ``op_counters``; concurrent
    encryption calls against one context are legal.
    """

    def __init__(self, key: SecretKey, pivot_index: PivotIndex,
                 nuance_table: NuanceTable, build_time_us: float):
        self.key = key
        self.pivot_index = pivot_index
        self.nuance_table = nuance_table
        self.build_time_us = build_time_us
        self.op_counters = OpCounters()

    @property
    def n_bits(self) -> int:
        return self.pivot_index.n_bits

    @property
    def delta_p(self) -> int:
        return self.pivot_index.delta_p

    @property
    def precompute_count(self) -> int:
        """Fresh encryptions spent building the caches."""
        return len(self.pivot_index.pivots) + len(self.nuance_table.entries)

    def describe(self) -> str:
        """Human-readable context dump for diagnostics."""
        nt = self.nuance_table
        budget = "none" if nt.budget is None else str(nt.budget)
        return "\n".join([
            f"backend:  {self.key.scheme_id}",
            f"domain:   [0, 2**{self.n_bits})",
            f"pivots:   {len(self.pivot_index.pivots)} at spacing {self.delta_p}",
            f"nuances:  exponents {list(nt.exponents)} "
            f"(full set {nt.full_exponent_count}, budget {budget})",
            f"build:    {self.build_time_us:.1f} us "
            f"({self.precompute_count} fresh encryptions)",
        ])


def build_context(key: SecretKey, n_bits: int, p: int,
                  budget: int | None = None) -> IncheContext:
    """Precompute pivot and nuance ciphertexts for ``p`` equal-width gaps.

    ``budget`` caps the nuance cache at the lowest ``budget`` exponents
    (``budget=0`` caches nothing and every encryption pays one fresh residual
    encryption). Build wall time is recorded on the context as overhead,
    separate from any later encryption timing.
    """
    if n_bits < 1:
        raise ParameterError(f"n_bits must be >= 1, got {n_bits}")
    if n_bits > key.params.n_bits:
        raise ParameterError(
            f"context n_bits={n_bits} exceeds the key's provisioned domain "
            f"({key.params.n_bits} bits)"
        )
    domain = 1 << n_bits
    if not 1 <= p <= domain:
        raise ParameterError(f"pivot count p={p} outside [1, 2**{n_bits}]")
    if budget is not None and budget < 0:
        raise ParameterError(f"nuance budget must be >= 0, got {budget}")

    t0 = time.perf_counter_ns()
    delta_p = -(-domain // p)
    pivot_count = -(-domain // delta_p)  # trailing pivot >= domain is dropped
    pivots = tuple(i * delta_p for i in range(pivot_count))
    cached = tuple(key.encrypt(pv) for pv in pivots)

    full_count = 0 if delta_p == 1 else (delta_p - 1).bit_length()
    keep = full_count if budget is None else min(budget, full_count)
    entries = {j: key.encrypt(1 << j) for j in range(keep)}
    build_time_us = (time.perf_counter_ns() - t0) / 1000.0

    index = PivotIndex(n_bits=n_bits, delta_p=delta_p, pivots=pivots,
                       cached=cached, uniform=True)
    table = NuanceTable(entries=entries, budget=budget,
                        full_exponent_count=full_count)
    return IncheContext(key, index, table, build_time_us)


def pivot_lookup(ctx: IncheContext, val: int) -> tuple[int, Ciphertext]:
    """Gap index and cached pivot ciphertext for ``val``.

    Gaps are half-open: a value equal to a pivot belongs to that pivot's gap.
    """
    i = ctx.pivot_index.lookup_index(val)
    return i, ctx.pivot_index.cached[i]


def decompose(ctx: IncheContext, val: int) -> Decomposition:
    """Split ``val`` into its pivot and the binary expansion of the offset."""
    i = ctx.pivot_index.lookup_index(val)
    offset = val - ctx.pivot_index.pivots[i]
    bits = frozenset(j for j in range(offset.bit_length()) if offset >> j & 1)
    return Decomposition(pivot_index=i, offset_bits=bits)


def inche_encrypt(ctx: IncheContext, val: int) -> Ciphertext:
    """Encrypt ``val`` by composing cached ciphertexts.

    With a complete nuance cache the result is built purely from cached
    ciphertexts via homomorphic addition; offset bits whose radix is not
    cached are summed in plaintext and paid for with a single fresh residual
    encryption. Operation counters are bumped per homomorphic addition and
    per fresh encryption.
    """
    pi = ctx.pivot_index
    i = pi.lookup_index(val)
    offset = val - pi.pivots[i]
    group = ctx.key.group
    acc = pi.cached[i].value

    entries = ctx.nuance_table.entries
    adds = 0
    residual = 0
    j = 0
    rem = offset
    while rem:
        if rem & 1:
            nuance = entries.get(j)
            if nuance is not None:
                acc = group.add_values(acc, nuance.value)
                adds += 1
            else:
                residual += 1 << j
        rem >>= 1
        j += 1

    fresh = 0
    if residual:
        acc = group.add_values(acc, ctx.key.encrypt(residual).value)
        adds += 1
        fresh = 1

    ctx.op_counters.add_many(he_add=adds, fresh_encrypt=fresh)
    return Ciphertext(acc, ctx.key.scheme_id, group)


def inche_encrypt_budgeted(ctx: IncheContext, val: int) -> Ciphertext:
    """Encrypt under a capped nuance cache; alias of the composing path.

    Kept as an explicit surface for the memory-constrained mode: on a context
    with ``budget=0`` this is ``cached pivot (+) fresh_encrypt(val - P_i)``,
    and at full budget it degenerates to :func:`inche_encrypt` with zero
    fresh encryptions.
    """
    return inche_encrypt(ctx, val)


@dataclass(frozen=True)
class RandomizationReport:
    """Outcome of the ciphertext-randomization smoke test."""

    scheme_id: str
    trials: int
    plaintext: int
    fresh_all_distinct: bool
    cache_all_distinct: bool
    composition_deterministic: bool

    @property
    def caveat(self) -> str:
        if self.composition_deterministic:
            return (
                "composed ciphertexts are deterministic per plaintext under a "
                "fixed cache; repeated field values produce equal ciphertexts"
            )
        return ""


def randomization_smoke_test(ctx: IncheContext, plaintext: int | None = None,
                             trials: int = 1000) -> RandomizationReport:
    """Check that fresh encryptions randomize while composed ones do not.

    Requires a probabilistic backend; asking the deterministic debug oracle
    for randomness would only measure its own design.
    """
    if not ctx.key.probabilistic:
        raise ParameterError(
            "randomization smoke test requires a probabilistic backend"
        )
    if plaintext is None:
        plaintext = min(7, (1 << ctx.n_bits) - 1)

    fresh_values = {int(ctx.key.encrypt(plaintext).value) for _ in range(trials)}
    cache_values = [int(c.value) for c in ctx.pivot_index.cached]
    cache_values += [int(c.value) for c in ctx.nuance_table.entries.values()]
    first = inche_encrypt(ctx, plaintext)
    second = inche_encrypt(ctx, plaintext)

    return RandomizationReport(
        scheme_id=ctx.key.scheme_id,
        trials=trials,
        plaintext=plaintext,
        fresh_all_distinct=len(fresh_values) == trials,
        cache_all_distinct=len(set(cache_values)) == len(cache_values),
        composition_deterministic=first.value == second.value,
    )
