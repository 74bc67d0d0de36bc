"""Pivot index, nuance cache, decomposition, and composed encryption."""

import math
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inche import (
    ParameterError,
    PivotIndex,
    PlaintextRangeError,
    build_context,
    decompose,
    inche_encrypt,
    inche_encrypt_budgeted,
    pivot_lookup,
    randomization_smoke_test,
)


class TestBuildContext:
    def test_equal_width_layout(self, key16):
        # key provisioned for 16 bits serves the 8-bit context domain too
        ctx = build_context(key16, 8, 4)
        assert ctx.delta_p == 64
        assert ctx.pivot_index.pivots == (0, 64, 128, 192)
        assert ctx.nuance_table.radixes == (1, 2, 4, 8, 16, 32)
        for i, ct in enumerate(ctx.pivot_index.cached):
            assert key16.decrypt(ct) == ctx.pivot_index.pivots[i]
        for j, ct in ctx.nuance_table.entries.items():
            assert key16.decrypt(ct) == 1 << j

    def test_every_value_is_a_pivot_when_p_covers_domain(self, key16):
        ctx = build_context(key16, 8, 256)
        assert ctx.delta_p == 1
        assert len(ctx.pivot_index.pivots) == 256
        assert ctx.nuance_table.entries == {}

    def test_budget_keeps_lowest_radixes(self, key16):
        ctx = build_context(key16, 8, 4, budget=1)
        assert ctx.nuance_table.radixes == (1,)
        assert ctx.nuance_table.full_exponent_count == 6
        assert not ctx.nuance_table.complete

    def test_nuance_cache_covers_every_offset(self, key16):
        for p in (1, 3, 4, 7, 256):
            ctx = build_context(key16, 8, p)
            cacheable = sum(ctx.nuance_table.radixes)
            assert cacheable >= ctx.delta_p - 1

    def test_non_dividing_pivot_count(self, key16):
        # ceil spacing drops a trailing pivot that would leave the domain
        ctx = build_context(key16, 3, 5)
        assert ctx.delta_p == 2
        assert ctx.pivot_index.pivots == (0, 2, 4, 6)
        for val in range(8):
            assert key16.decrypt(inche_encrypt(ctx, val)) == val

    def test_invalid_pivot_counts(self, key16):
        with pytest.raises(ParameterError):
            build_context(key16, 8, 0)
        with pytest.raises(ParameterError):
            build_context(key16, 8, 257)

    def test_context_domain_cannot_exceed_key_domain(self, key16):
        with pytest.raises(ParameterError):
            build_context(key16, 32, 4)

    def test_negative_budget(self, key16):
        with pytest.raises(ParameterError):
            build_context(key16, 8, 4, budget=-1)

    def test_build_time_recorded(self, key16):
        ctx = build_context(key16, 8, 4)
        assert ctx.build_time_us > 0
        assert ctx.precompute_count == 4 + 6

    def test_describe_mentions_layout(self, key16):
        text = build_context(key16, 8, 4).describe()
        assert "spacing 64" in text
        assert "[0, 1, 2, 3, 4, 5]" in text
        assert "us" in text


class TestPivotLookup:
    def test_first_gap(self, debug16):
        ctx = build_context(debug16, 8, 4)
        i, ct = pivot_lookup(ctx, 13)
        assert i == 0 and debug16.decrypt(ct) == 0

    def test_boundary_belongs_to_upper_gap(self, debug16):
        ctx = build_context(debug16, 8, 4)
        i, ct = pivot_lookup(ctx, 64)
        assert i == 1 and debug16.decrypt(ct) == 64

    def test_last_gap(self, debug16):
        ctx = build_context(debug16, 8, 4)
        i, ct = pivot_lookup(ctx, 255)
        assert i == 3 and debug16.decrypt(ct) == 192

    def test_out_of_domain(self, debug16):
        ctx = build_context(debug16, 8, 4)
        with pytest.raises(PlaintextRangeError):
            pivot_lookup(ctx, 256)
        with pytest.raises(PlaintextRangeError):
            pivot_lookup(ctx, -1)

    def test_division_agrees_with_binary_search(self, debug16):
        ctx = build_context(debug16, 8, 12)
        pi = ctx.pivot_index
        fallback = PivotIndex(n_bits=pi.n_bits, delta_p=pi.delta_p,
                              pivots=pi.pivots, cached=pi.cached,
                              uniform=False)
        for val in range(256):
            assert pi.lookup_index(val) == fallback.lookup_index(val)


class TestDecompose:
    def test_offset_bits_are_binary_expansion(self, debug16):
        ctx = build_context(debug16, 5, 4)  # delta_p = 8
        d = decompose(ctx, 13)
        assert ctx.pivot_index.pivots[d.pivot_index] == 8
        assert d.offset_bits == {0, 2}  # 13 - 8 = 5 = 0b101

    def test_pivot_hits_exactly(self, debug16):
        ctx = build_context(debug16, 8, 4)
        assert decompose(ctx, 128).offset_bits == frozenset()

    def test_maximal_offset(self, debug16):
        ctx = build_context(debug16, 8, 4)
        d = decompose(ctx, 127)  # gap [64, 128), offset 63
        assert d.offset_bits == {0, 1, 2, 3, 4, 5}

    def test_recomposition_exhaustive(self, debug16):
        for p in (1, 2, 3, 4, 16, 256):
            ctx = build_context(debug16, 8, p)
            for val in range(256):
                d = decompose(ctx, val)
                recomposed = ctx.pivot_index.pivots[d.pivot_index] + sum(
                    1 << j for j in d.offset_bits
                )
                assert recomposed == val
                assert len(d.offset_bits) <= max(1, ctx.nuance_table.full_exponent_count)


class TestIncheEncrypt:
    def test_single_value_everywhere(self, key16, scheme):
        for p in (1, 2, 4, 64):
            ctx = build_context(key16, 8, p)
            assert key16.decrypt(inche_encrypt(ctx, 13)) == 13

    def test_exhaustive_roundtrip_debug_oracle(self, debug16):
        # oracle: direct encryption of the same value on the debug backend
        for p in (2, 4, 256):
            ctx = build_context(debug16, 8, p)
            for val in range(256):
                composed = debug16.decrypt(inche_encrypt(ctx, val))
                direct = debug16.decrypt(debug16.encrypt(val))
                assert composed == direct == val

    def test_cross_backend_agreement(self, paillier16, debug16):
        pctx = build_context(paillier16, 16, 16)
        dctx = build_context(debug16, 16, 16)
        for val in (0, 1, 13, 255, 4097, 65535):
            assert paillier16.decrypt(inche_encrypt(pctx, val)) == \
                debug16.decrypt(inche_encrypt(dctx, val))

    def test_out_of_domain(self, debug16):
        ctx = build_context(debug16, 8, 4)
        with pytest.raises(PlaintextRangeError):
            inche_encrypt(ctx, 256)

    def test_add_count_bounded(self, debug16):
        for n_bits, p in ((8, 2), (8, 16), (12, 32), (16, 5)):
            ctx = build_context(debug16, n_bits, p)
            bound = n_bits - int(math.log2(p)) + 1
            for val in range(0, 1 << n_bits, 97):
                before = ctx.op_counters.snapshot()
                inche_encrypt(ctx, val)
                delta = ctx.op_counters.snapshot() - before
                assert delta.he_add <= bound
                assert delta.fresh_encrypt == 0

    def test_no_fresh_encryptions_with_full_cache(self, key16):
        ctx = build_context(key16, 16, 8)
        for val in (0, 1, 9999, 65535):
            inche_encrypt(ctx, val)
        assert ctx.op_counters.snapshot().fresh_encrypt == 0

    def test_composition_is_deterministic(self, paillier16):
        ctx = build_context(paillier16, 16, 8)
        assert inche_encrypt(ctx, 7).value == inche_encrypt(ctx, 7).value

    def test_concurrent_composition(self, debug16):
        ctx = build_context(debug16, 16, 8)
        values = list(range(0, 65536, 131))
        errors = []

        def work():
            for v in values:
                if debug16.decrypt(inche_encrypt(ctx, v)) != v:
                    errors.append(v)

        threads = [threading.Thread(target=work) for _ in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        expected_adds = 4 * sum(bin(v % ctx.delta_p).count("1") for v in values)
        assert ctx.op_counters.snapshot().he_add == expected_adds


class TestBudgetedEncrypt:
    def test_budget_zero_single_residual(self, key16, scheme):
        ctx = build_context(key16, 8, 4, budget=0)
        before = ctx.op_counters.snapshot()
        ct = inche_encrypt_budgeted(ctx, 13)
        delta = ctx.op_counters.snapshot() - before
        assert key16.decrypt(ct) == 13
        assert delta.fresh_encrypt == 1  # the residual e(13 - P_i)
        assert delta.he_add == 1

    def test_budget_one_offset_five(self, debug16):
        # offset 5 = 0b101: bit 0 cached, bit 2 folded into one fresh residual
        ctx = build_context(debug16, 8, 4, budget=1)
        before = ctx.op_counters.snapshot()
        ct = inche_encrypt_budgeted(ctx, 64 + 5)
        delta = ctx.op_counters.snapshot() - before
        assert debug16.decrypt(ct) == 69
        assert delta.fresh_encrypt == 1
        assert delta.he_add == 2  # cached bit 0, then the residual 4

    def test_full_budget_behaves_like_unbudgeted(self, debug16):
        full = build_context(debug16, 8, 4, budget=100)
        plain = build_context(debug16, 8, 4)
        for val in range(256):
            a = inche_encrypt_budgeted(full, val)
            b = inche_encrypt(plain, val)
            assert a.value == b.value
        assert full.op_counters.snapshot().fresh_encrypt == 0

    def test_fresh_count_monotone_in_budget(self, debug16):
        values = list(range(0, 256, 7))
        counts = []
        for budget in (0, 1, 2, 4, None):
            ctx = build_context(debug16, 8, 2, budget=budget)
            for v in values:
                inche_encrypt_budgeted(ctx, v)
            counts.append(ctx.op_counters.snapshot().fresh_encrypt)
        assert counts == sorted(counts, reverse=True)
        assert counts[-1] == 0

    def test_budgeted_roundtrip_exhaustive(self, debug16):
        for budget in (0, 1, 3):
            ctx = build_context(debug16, 8, 4, budget=budget)
            for val in range(256):
                assert debug16.decrypt(inche_encrypt_budgeted(ctx, val)) == val


class TestRandomizationSmoke:
    def test_fresh_randomizes_composition_does_not(self, paillier16):
        ctx = build_context(paillier16, 16, 8)
        report = randomization_smoke_test(ctx, trials=100)
        assert report.fresh_all_distinct
        assert report.cache_all_distinct
        assert report.composition_deterministic
        assert "deterministic" in report.caveat

    def test_requires_probabilistic_backend(self, debug16):
        ctx = build_context(debug16, 16, 8)
        with pytest.raises(ParameterError):
            randomization_smoke_test(ctx)


# Property tests over the whole construction on the debug oracle.

@settings(max_examples=150, deadline=None)
@given(data=st.data(), n_bits=st.integers(1, 12))
def test_recomposition_property(key_cache, data, n_bits):
    key = key_cache(scheme="debug", n_bits=12)
    p = data.draw(st.integers(1, 1 << n_bits))
    val = data.draw(st.integers(0, (1 << n_bits) - 1))
    ctx = build_context(key, n_bits, p)
    d = decompose(ctx, val)
    assert ctx.pivot_index.pivots[d.pivot_index] + sum(
        1 << j for j in d.offset_bits
    ) == val
    assert key.decrypt(inche_encrypt(ctx, val)) == val


@settings(max_examples=100, deadline=None)
@given(data=st.data())
def test_budget_never_breaks_correctness(key_cache, data):
    key = key_cache(scheme="debug", n_bits=12)
    p = data.draw(st.integers(1, 64))
    budget = data.draw(st.integers(0, 14))
    val = data.draw(st.integers(0, (1 << 12) - 1))
    ctx = build_context(key, 12, p, budget=budget)
    assert key.decrypt(inche_encrypt_budgeted(ctx, val)) == val
