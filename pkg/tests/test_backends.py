import numpy as np
import pytest
from hypothesis import given, strategies as st

from bczklab.backends import (
    HASH_PREIMAGE, IDEAL, CoinflipInstance, CommitmentPeekingCrsProver, CrsAbort, FixedBCrsProver,
    HonestCrsProver, HonestCrsVerifier, LyingCrsVerifier, ProofToken, RelationId, RelationShapeError,
    RwiInstance, RwiWitness, SlotPublic, UnknownRelationError, crs_from_coinflip, encode_canonical,
    relation_rwi,
)
from bczklab.bits import Bits
from bczklab.commitment import Opening, commit, receiver_string


# ------------------------------------------------------------ encoding layout

def test_encoding_scalars():
    assert encode_canonical(None) == b"N"
    assert encode_canonical(True) == b"T"
    assert encode_canonical(False) == b"F"
    assert encode_canonical(0) == b"I\x00\x00\x00\x01\x00"
    assert encode_canonical(255) == b"I\x00\x00\x00\x02\x00\xff"
    assert encode_canonical(-1) == b"I\x00\x00\x00\x01\xff"
    assert encode_canonical(b"ab") == b"B\x00\x00\x00\x02ab"
    assert encode_canonical("hé") == b"S\x00\x00\x00\x03h\xc3\xa9"


def test_encoding_bits_and_sequences():
    assert encode_canonical(Bits(0b101, 3)) == b"K\x00\x00\x00\x03\x00\x00\x00\x01\x05"
    assert encode_canonical((1, None)) == b"L\x00\x00\x00\x02" + b"I\x00\x00\x00\x01\x01" + b"N"
    assert encode_canonical([1, None]) == encode_canonical((1, None))


def test_encoding_tags_named_objects():
    inst = CoinflipInstance(Bits(1, 3), commit(Bits(1, 3), 0, Bits(0, 1)), 1)
    enc = encode_canonical(inst)
    name = b"CoinflipInstance"
    assert enc.startswith(b"D" + len(name).to_bytes(4, "big") + name + b"L\x00\x00\x00\x03")


@given(st.recursive(
    st.none() | st.booleans() | st.integers(-2**70, 2**70) | st.binary(max_size=8) | st.text(max_size=4),
    lambda inner: st.lists(inner, max_size=3).map(tuple), max_leaves=10,
), st.recursive(
    st.none() | st.booleans() | st.integers(-2**70, 2**70) | st.binary(max_size=8) | st.text(max_size=4),
    lambda inner: st.lists(inner, max_size=3).map(tuple), max_leaves=10,
))
def test_encoding_is_injective_on_samples(a, b):
    if a != b or type(a) is not type(b):
        # bool/int equality aside, distinct values give distinct encodings
        if not (isinstance(a, bool) or isinstance(b, bool)):
            assert (encode_canonical(a) == encode_canonical(b)) == (a == b)


def test_encoding_rejects_unknown_objects():
    with pytest.raises(TypeError):
        encode_canonical(object())


# ------------------------------------------------------------- RWI relation

def _slots(rng, n_slots, n=8):
    """Slots with known openings; prover bit equals verifier bit on even j."""
    slots, opens = [], []
    for j in range(n_slots):
        rs, seed = receiver_string(n, rng), Bits.random(n, rng)
        bit = int(rng.integers(2))
        vbit = bit if j % 2 == 0 else bit ^ 1
        slots.append(SlotPublic(rs, commit(rs, bit, seed), vbit))
        opens.append(Opening(bit, seed))
    return tuple(slots), tuple(opens)


def test_rwi_base_witness_alone(rng):
    x, w = HASH_PREIMAGE.sample(16, rng)
    slots, _ = _slots(rng, 4)
    assert relation_rwi(RwiInstance(x, slots, 4), RwiWitness(w, (None,) * 4))


def test_rwi_threshold_boundary(rng):
    x = HASH_PREIMAGE.sample_false(rng)
    slots, opens = _slots(rng, 8)
    matched = [o if j % 2 == 0 else None for j, o in enumerate(opens)]  # 4 matched openings
    assert relation_rwi(RwiInstance(x, slots, 4), RwiWitness(None, tuple(matched)))
    assert not relation_rwi(RwiInstance(x, slots, 5), RwiWitness(None, tuple(matched)))


def test_rwi_unmatched_openings_never_count(rng):
    x = HASH_PREIMAGE.sample_false(rng)
    slots, opens = _slots(rng, 8)
    odd_only = tuple(o if j % 2 else None for j, o in enumerate(opens))
    assert not relation_rwi(RwiInstance(x, slots, 1), RwiWitness(None, odd_only))


def test_rwi_shape_error(rng):
    x = HASH_PREIMAGE.sample_false(rng)
    slots, opens = _slots(rng, 4)
    with pytest.raises(RelationShapeError):
        relation_rwi(RwiInstance(x, slots, 1), RwiWitness(None, opens[:2]))


# ------------------------------------------------------------ ideal backend

def test_prove_verify_and_mismatch(rng):
    rs, seed = receiver_string(8, rng), Bits.random(8, rng)
    inst = CoinflipInstance(rs, commit(rs, 1, seed), 1)
    tok = IDEAL.prove(RelationId.RCoinflipOpen, inst, seed)
    assert IDEAL.verify(RelationId.RCoinflipOpen, inst, tok)
    assert IDEAL.verify(RelationId.RCoinflipOpen, inst, tok.to_bytes())
    other = CoinflipInstance(rs, inst.commitment, 0)
    assert not IDEAL.verify(RelationId.RCoinflipOpen, other, tok)
    bad = IDEAL.prove(RelationId.RCoinflipOpen, other, seed)
    assert not IDEAL.verify(RelationId.RCoinflipOpen, other, bad)


def test_token_bytes_round_trip_and_garbage():
    tok = ProofToken(RelationId.RWI, bytes(range(32)), True)
    assert ProofToken.from_bytes(tok.to_bytes()) == tok
    assert len(tok.to_bytes()) == ProofToken.SIZE
    assert not IDEAL.verify(RelationId.RWI, None, b"garbage")
    assert not IDEAL.verify(RelationId.RWI, None, None)


def test_unknown_relation():
    with pytest.raises(UnknownRelationError):
        IDEAL.prove(99, None, None)


def test_simulated_token_verifies(rng):
    rs = receiver_string(8, rng)
    inst = CoinflipInstance(rs, commit(rs, 0, Bits.random(8, rng)), 1)
    assert IDEAL.verify(RelationId.RCoinflipOpen, inst, IDEAL.simulate(RelationId.RCoinflipOpen, inst))


# --------------------------------------------------------------- CRS setup

def test_crs_uniform_over_many_bits():
    crs, _ = crs_from_coinflip(100_000, HonestCrsProver(), HonestCrsVerifier(), np.random.default_rng(7), seed_len=8)
    assert 0.48 <= crs.count() / crs.length <= 0.52


@pytest.mark.parametrize("prover", [FixedBCrsProver(0), FixedBCrsProver(1), CommitmentPeekingCrsProver()])
def test_crs_prover_cannot_bias(prover):
    crs, _ = crs_from_coinflip(4000, prover, HonestCrsVerifier(), np.random.default_rng(3), seed_len=8)
    assert 0.46 <= crs.count() / crs.length <= 0.54


def test_crs_lying_verifier_aborts_at_index():
    with pytest.raises(CrsAbort) as exc:
        crs_from_coinflip(10, HonestCrsProver(), LyingCrsVerifier(4), np.random.default_rng(0))
    assert exc.value.index == 4


def test_crs_single_bit_has_four_messages():
    _, tr = crs_from_coinflip(1, HonestCrsProver(), HonestCrsVerifier(), np.random.default_rng(0))
    assert len(tr.messages) == 4
