import hashlib
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bczklab.bits import Bits
from bczklab.commitment import (
    Commitment, CommitmentLengthError, Opening, binding_collision_search, brute_force_open, commit, prg,
    receiver_string, verify_open,
)

bits = st.integers(1, 96).flatmap(lambda n: st.builds(Bits, st.integers(0, (1 << n) - 1), st.just(n)))


@given(bits)
def test_bits_hex_and_bytes_round_trip(b):
    assert Bits.from_hex(b.to_hex(), b.length) == b
    assert Bits.from_bytes(b.to_bytes(), b.length) == b
    assert Bits.from_iter(b.to_list()) == b


@given(bits, st.data())
def test_bits_xor_is_an_involution(a, data):
    b = Bits(data.draw(st.integers(0, (1 << a.length) - 1)), a.length)
    assert (a ^ b) ^ b == a


def test_bits_reject_oversized_value():
    with pytest.raises(ValueError):
        Bits(4, 2)


def test_prg_matches_direct_sha256():
    seed = Bits(0xA5, 8)
    expect = hashlib.sha256(bytes([0xA5]) + b"\0\0\0\0").digest() + hashlib.sha256(bytes([0xA5]) + b"\0\0\0\1").digest()
    assert prg(seed, 300).value == int.from_bytes(expect, "big") >> (512 - 300)


def test_prg_deterministic_and_empty():
    s = Bits(12345, 16)
    assert prg(s, 256) == prg(s, 256)
    assert prg(s, 0) == Bits(0, 0)


def test_prg_bit_frequency_over_all_8bit_seeds():
    ones = sum(prg(Bits(v, 8), 24).count() for v in range(256))
    assert 0.45 <= ones / (256 * 24) <= 0.55


@given(st.integers(0, 255), st.integers(0, (1 << 24) - 1), st.integers(0, 1))
def test_commit_open_round_trip(s, r, bit):
    rs, seed = Bits(r, 24), Bits(s, 8)
    c = commit(rs, bit, seed)
    assert verify_open(rs, c, Opening(bit, seed))


def test_commit_definition(rng):
    rs, seed = receiver_string(8, rng), Bits.random(8, rng)
    assert commit(rs, 0, seed).value == prg(seed, 24)
    assert (commit(rs, 1, seed).value ^ rs) == prg(seed, 24)


def test_flipped_bit_fails_to_open(rng):
    fails = 0
    for _ in range(200):
        rs, seed = receiver_string(8, rng), Bits.random(8, rng)
        c = commit(rs, 0, seed)
        fails += not verify_open(rs, c, Opening(1, seed))
    assert fails == 200


def test_truncated_commitment_raises(rng):
    rs, seed = receiver_string(8, rng), Bits.random(8, rng)
    c = commit(rs, 1, seed)
    short = Commitment(Bits(c.value.value >> 1, 23))
    with pytest.raises(CommitmentLengthError):
        verify_open(rs, short, Opening(1, seed))


def _pairs_oracle(n, rs):
    g = {s: prg(Bits(s, n), 3 * n).value for s in range(1 << n)}
    return sorted((s0, s1) for s0, s1 in product(range(1 << n), repeat=2) if g[s0] == g[s1] ^ rs.value)


def test_collision_search_matches_direct_enumeration(rng):
    for _ in range(8):
        rs = receiver_string(4, rng)
        got = [(a.value, b.value) for a, b in binding_collision_search(4, rs)]
        assert got == _pairs_oracle(4, rs)


def test_collision_rate_is_rare_at_n4(rng):
    counts = [len(binding_collision_search(4, receiver_string(4, rng))) for _ in range(64)]
    # 2^8 seed pairs, each colliding with probability 2^-12
    assert np.mean(counts) <= 2 ** 8 / 2 ** 12 + 0.25


def test_collision_table_n2_deterministic():
    rs = Bits(0b101101, 6)
    assert binding_collision_search(2, rs) == binding_collision_search(2, rs)


def test_brute_force_open_finds_the_real_opening(rng):
    rs, seed = receiver_string(6, rng), Bits.random(6, rng)
    c = commit(rs, 1, seed)
    assert Opening(1, seed) in brute_force_open(rs, c, 6)


def test_opening_hex_round_trip():
    op = Opening(1, Bits(0xBEEF, 16))
    assert Opening.from_hex(op.to_hex(), 16) == op
