"""Frequency-weighted encrypted aggregation.

Folding homomorphic addition over one ciphertext per row costs ``rows - 1``
expensive group operations. Because every composed ciphertext is a sum of
cached pivots and radixes, an encrypted column total can instead be assembled
from occurrence counts: count, in plaintext, how often each pivot and each
radix exponent appears across the rows, then combine the cached ciphertexts
once with scalar multiplication. The homomorphic cost becomes a function of
the cache size only, independent of the row count.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .backend import Ciphertext
from .core import IncheContext, decompose
from .errors import ParameterError, SchemeMismatchError


@dataclass
class FrequencyAccumulator:
    """Plaintext occurrence counts of pivots and radix exponents.

    Maintains the exact identity
    ``sum(pivot_freq[i] * P_i) + sum(nuance_freq[j] * 2**j) == sum(values)``
    for every multiset of accumulated values. Accumulators built by parallel
    workers merge by component-wise addition.
    """

    pivot_freq: list[int]
    nuance_freq: list[int]
    row_count: int = 0

    @classmethod
    def for_context(cls, ctx: IncheContext) -> "FrequencyAccumulator":
        return cls(
            pivot_freq=[0] * len(ctx.pivot_index.pivots),
            nuance_freq=[0] * ctx.nuance_table.full_exponent_count,
        )

    def merge(self, other: "FrequencyAccumulator") -> None:
        """Fold another accumulator into this one (associative, commutative)."""
        if (len(self.pivot_freq) != len(other.pivot_freq)
                or len(self.nuance_freq) != len(other.nuance_freq)):
            raise ParameterError("accumulators were built for different contexts")
        for i, f in enumerate(other.pivot_freq):
            self.pivot_freq[i] += f
        for j, f in enumerate(other.nuance_freq):
            self.nuance_freq[j] += f
        self.row_count += other.row_count


def accumulate(acc: FrequencyAccumulator, ctx: IncheContext,
               val: int) -> FrequencyAccumulator:
    """Count ``val``'s pivot and offset bits; performs no homomorphic work."""
    d = decompose(ctx, val)
    acc.pivot_freq[d.pivot_index] += 1
    for j in d.offset_bits:
        acc.nuance_freq[j] += 1
    acc.row_count += 1
    return acc


def accumulate_all(acc: FrequencyAccumulator, ctx: IncheContext,
                   values: Iterable[int]) -> FrequencyAccumulator:
    for v in values:
        accumulate(acc, ctx, v)
    return acc


def weighted_plaintext_sum(acc: FrequencyAccumulator, ctx: IncheContext) -> int:
    """The plaintext side of the frequency identity (exact, no encryption)."""
    pivots = ctx.pivot_index.pivots
    total = sum(f * pivots[i] for i, f in enumerate(acc.pivot_freq))
    total += sum(f * (1 << j) for j, f in enumerate(acc.nuance_freq))
    return total


def finalize_sum(acc: FrequencyAccumulator, ctx: IncheContext) -> Ciphertext:
    """Encrypted column total from the counts and the cached ciphertexts.

    Skips zero-frequency terms, so the homomorphic operation count is at most
    one scalar multiplication and one addition per cached pivot and nuance.
    A nonzero count for an uncached radix is an error: frequency aggregation
    needs the full nuance cache.
    """
    group = ctx.key.group
    entries = ctx.nuance_table.entries
    result = None
    adds = 0
    muls = 0

    def fold(value, freq):
        nonlocal result, adds, muls
        term = group.scale_value(value, freq)
        muls += 1
        if result is None:
            result = term
        else:
            result = group.add_values(result, term)
            adds += 1

    for i, f in enumerate(acc.pivot_freq):
        if f:
            fold(ctx.pivot_index.cached[i].value, f)
    for j, f in enumerate(acc.nuance_freq):
        if f:
            if j not in entries:
                raise ParameterError(
                    f"radix 2**{j} occurs {f} times but is not cached; "
                    "finalize_sum requires an unbudgeted nuance table"
                )
            fold(entries[j].value, f)

    if result is None:
        ctx.op_counters.add_many(fresh_encrypt=1)
        return ctx.key.encrypt(0)
    ctx.op_counters.add_many(he_add=adds, he_scalar_mul=muls)
    return Ciphertext(result, ctx.key.scheme_id, group)


def naive_sum(ctx: IncheContext, ciphertexts: Sequence[Ciphertext]) -> Ciphertext:
    """Baseline aggregation: left-fold homomorphic addition over every row."""
    group = ctx.key.group
    scheme_id = ctx.key.scheme_id
    result = None
    adds = 0
    for c in ciphertexts:
        if c.scheme_id != scheme_id:
            raise SchemeMismatchError(
                f"ciphertext scheme {c.scheme_id!r} does not match context "
                f"scheme {scheme_id!r}"
            )
        if result is None:
            result = c.value
        else:
            result = group.add_values(result, c.value)
            adds += 1
    if result is None:
        ctx.op_counters.add_many(fresh_encrypt=1)
        return ctx.key.encrypt(0)
    ctx.op_counters.add_many(he_add=adds)
    return Ciphertext(result, scheme_id, group)


def avg_from_sum(sum_plain: int, row_count: int) -> Fraction:
    """Client-side exact average after decryption: ``sum / count``."""
    if row_count <= 0:
        raise ParameterError(f"row_count must be positive, got {row_count}")
    return Fraction(sum_plain, row_count)
