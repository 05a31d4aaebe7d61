from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from bczklab.params import (
    OutOfRangeError, ParameterError, Profile, ProtocolParams, check_claim_bounds, derive_params,
    desk_profile, full_grid,
)


def test_formula_profile_small():
    p = derive_params(1, 1)
    assert (p.slots, p.blocks, p.prot_len, p.block_len, p.threshold) == (120, 24, 364, 15, 61)
    assert p.profile is Profile.PAPER


def test_formula_profile_q2_lam4():
    p = derive_params(2, 4)
    assert (p.slots, p.blocks, p.prot_len, p.block_len, p.threshold) == (61440, 6144, 184324, 60, 30784)


@pytest.mark.parametrize("q,lam", [(0, 1), (1, 0), (-1, 3)])
def test_formula_profile_rejects_nonpositive(q, lam):
    with pytest.raises(ParameterError):
        derive_params(q, lam)


def test_fixed_width_overflow_is_reported():
    with pytest.raises(OutOfRangeError):
        derive_params(8, 1 << 40, int_bits=64)
    assert derive_params(8, 16, int_bits=64).slots == 120 * 8**7 * 16


def test_desk_profile_values():
    p = desk_profile(64, 16, 6, 2)
    assert (p.threshold, p.prot_len, p.block_len) == (38, 196, 24)


@pytest.mark.parametrize("kw", [
    dict(slots=63, blocks=16, gap=6, q=2),
    dict(slots=64, blocks=200, gap=6, q=1),
    dict(slots=64, blocks=16, gap=32, q=1),
    dict(slots=64, blocks=16, gap=0, q=1),
    dict(slots=64, blocks=1, gap=4, q=2),
])
def test_desk_profile_preconditions(kw):
    with pytest.raises(ParameterError):
        desk_profile(**kw)


def test_claim_bounds_examples():
    r = {(x.q, x.lam): x for x in check_claim_bounds([(2, 4), (1, 1), (3, 2)]).records}
    assert r[(2, 4)].mu_lower == Fraction(73730, 57)
    assert r[(2, 4)].six_q5_lambda == 768
    assert r[(1, 1)].mu_lower == Fraction(110, 12)
    assert r[(1, 1)].six_q5_lambda == 6
    assert all(x.holds for x in r.values())


def test_bound_grid_small_all_hold():
    rep = check_claim_bounds(full_grid(4, 8))
    assert len(rep.records) == 32 and rep.holds and rep.failures() == []


@given(st.integers(1, 6), st.integers(1, 40))
def test_record_round_trip(q, lam):
    p = derive_params(q, lam)
    rec = p.to_record()
    assert all(isinstance(v, str) for v in rec.values())
    assert ProtocolParams.from_record(rec) == p


@given(st.integers(1, 4), st.integers(2, 40).map(lambda s: 2 * s), st.data())
def test_desk_threshold_is_half_plus_gap(q, slots, data):
    gap = data.draw(st.integers(1, slots // 2 - 1))
    blocks = data.draw(st.integers(q, max(q, (3 * slots + 4) * q // 4)))
    p = desk_profile(slots, blocks, gap, q)
    assert p.threshold == slots // 2 + gap
    assert p.block_len >= 4
    assert ProtocolParams.from_record(p.to_record()) == p


def test_threshold_offset():
    p = desk_profile(64, 32, 10, 1)
    assert p.with_threshold_offset(24).threshold == p.threshold - 24
    with pytest.raises(ParameterError):
        p.with_threshold_offset(p.threshold)
