"""Proof backends, relation predicates and the coin-flipped reference string.

Only the ideal backend is provided: a proof token records which relation it
speaks about, a digest of the canonical instance encoding, and whether the
prover's witness actually satisfied the relation.
"""
from __future__ import annotations

import enum
import hashlib
import struct
from dataclasses import dataclass, field, fields, is_dataclass
from typing import Any, Callable, Protocol

import numpy as np

from .bits import Bits
from .commitment import Commitment, Opening, commit, receiver_string, verify_open
from .ssot import IdealSsot, SsotTranscript


class RelationId(enum.IntEnum):
    RWI = 1
    RZkPok = 2
    RSrotConsistency = 3
    RCoinflipOpen = 4
    RCrsBit = 5


class RelationShapeError(ValueError):
    """Instance or witness has the wrong shape for its relation."""


class UnknownRelationError(KeyError):
    pass


# ---------------------------------------------------------------- encoding

def encode_canonical(obj: Any) -> bytes:
    """Length-prefixed, type-tagged byte encoding (layout in README)."""
    out = bytearray()
    _enc(obj, out)
    return bytes(out)


def _enc_none(obj, out):
    out += b"N"


def _enc_bool(obj, out):
    out += b"T" if obj else b"F"


def _enc_int(obj, out):
    raw = obj.to_bytes((obj.bit_length() + 8) // 8, "big", signed=True)
    out += b"I" + _U32(len(raw)) + raw


def _enc_bytes(obj, out):
    out += b"B" + _U32(len(obj)) + bytes(obj)


def _enc_str(obj, out):
    raw = obj.encode()
    out += b"S" + _U32(len(raw)) + raw


def _enc_bits(obj, out):
    raw = obj.to_bytes()
    out += b"K" + _U32(obj.length) + _U32(len(raw)) + raw


def _enc_seq(obj, out):
    out += b"L" + _U32(len(obj))
    for item in obj:
        f = _ENCODERS.get(type(item))
        if f is None:
            _enc_other(item, out)
        else:
            f(item, out)


def _enc_other(obj, out):
    if hasattr(obj, "canonical"):
        body = obj.canonical()
    elif is_dataclass(obj):
        body = tuple(getattr(obj, f.name) for f in fields(obj))
    elif isinstance(obj, int):
        return _enc_int(int(obj), out)
    else:
        raise TypeError(f"no canonical encoding for {type(obj).__name__}")
    name = type(obj).__name__.encode()
    out += b"D" + _U32(len(name)) + name
    _enc(body, out)


_U32 = struct.Struct(">I").pack
_ENCODERS = {
    type(None): _enc_none, bool: _enc_bool, int: _enc_int, bytes: _enc_bytes,
    bytearray: _enc_bytes, str: _enc_str, Bits: _enc_bits, tuple: _enc_seq, list: _enc_seq,
}


def _enc(obj: Any, out: bytearray) -> None:
    f = _ENCODERS.get(type(obj))
    if f is None:
        _enc_other(obj, out)
    else:
        f(obj, out)


def instance_digest(relation: RelationId, instance: Any) -> bytes:
    return hashlib.sha256(bytes([int(relation)]) + encode_canonical(instance)).digest()


# ------------------------------------------------------------ base relation

class BaseRelation(Protocol):
    name: str

    def holds(self, x: bytes, w: Bits) -> bool: ...


@dataclass(frozen=True)
class HashPreimage:
    """x = SHA-256(len(w) || w); w is the witness."""

    name: str = "sha256-preimage"

    @staticmethod
    def image(w: Bits) -> bytes:
        return hashlib.sha256(struct.pack(">I", w.length) + w.to_bytes()).digest()

    def holds(self, x: bytes, w: Bits | None) -> bool:
        return w is not None and self.image(w) == x

    def sample(self, n_bits: int, rng: np.random.Generator) -> tuple[bytes, Bits]:
        w = Bits.random(n_bits, rng)
        return self.image(w), w

    def sample_false(self, rng: np.random.Generator) -> bytes:
        """An instance with no known witness (random 32 bytes)."""
        return rng.bytes(32)

    def canonical(self):
        return self.name


HASH_PREIMAGE = HashPreimage()


# --------------------------------------------------------------- instances

@dataclass(frozen=True)
class SlotPublic:
    rstring: Bits
    commitment: Commitment
    verifier_bit: int

    def canonical(self):
        return (self.rstring, self.commitment.value, self.verifier_bit)


@dataclass(frozen=True)
class RwiInstance:
    x: bytes
    slots: tuple[SlotPublic, ...]
    threshold: int
    base: Any = HASH_PREIMAGE

    def canonical(self):
        return (self.x, self.slots, self.threshold, self.base.canonical())


@dataclass(frozen=True)
class RwiWitness:
    w: Bits | None
    openings: tuple[Opening | None, ...]


@dataclass(frozen=True)
class CellPublic:
    transcript: SsotTranscript
    location: int

    def canonical(self):
        return (self.transcript, self.location)


@dataclass(frozen=True)
class CellSecret:
    sender_rand: Bits
    share: int
    alpha: int


@dataclass(frozen=True)
class ZkPokInstance:
    x: bytes
    lam: int
    cells: tuple[tuple[CellPublic, ...], ...]
    base: Any = HASH_PREIMAGE
    ssot: IdealSsot | None = field(default=None, compare=False)

    def canonical(self):
        return (self.x, self.lam, self.cells, self.base.canonical())


@dataclass(frozen=True)
class ZkPokWitness:
    w: Bits
    cells: tuple[tuple[CellSecret, ...], ...]


@dataclass(frozen=True)
class SrotInstance:
    lam: int
    main: SsotTranscript
    cells: tuple[tuple[CellPublic, ...], ...]
    ssot: IdealSsot | None = field(default=None, compare=False)

    def canonical(self):
        return (self.lam, self.main, self.cells)


@dataclass(frozen=True)
class SrotWitness:
    r_prime: int
    beta: int
    r_star: Bits
    cells: tuple[tuple[CellSecret, ...], ...]


@dataclass(frozen=True)
class CoinflipInstance:
    rstring: Bits
    commitment: Commitment
    a: int

    def canonical(self):
        return (self.rstring, self.commitment.value, self.a)


@dataclass(frozen=True)
class CrsBitInstance:
    rstring: Bits
    commitment: Commitment
    crs_bit: int
    b: int

    def canonical(self):
        return (self.rstring, self.commitment.value, self.crs_bit, self.b)


# -------------------------------------------------------------- predicates

def relation_rwi(inst: RwiInstance, wit: RwiWitness) -> bool:
    if len(wit.openings) not in (0, len(inst.slots)):
        raise RelationShapeError(
            f"{len(wit.openings)} openings for {len(inst.slots)} slots"
        )
    if wit.w is not None and inst.base.holds(inst.x, wit.w):
        return True
    matched = 0
    for slot, op in zip(inst.slots, wit.openings):
        if op is None or op.bit != slot.verifier_bit:
            continue
        if verify_open(slot.rstring, slot.commitment, op):
            matched += 1
            if matched >= inst.threshold:
                return True
    return matched >= inst.threshold


def _placement(location: int, share: int, alpha: int) -> tuple[int, int]:
    return (alpha, share) if location else (share, alpha)


def _cells_consistent(ssot, pub_rows, sec_rows) -> bool:
    for pub_row, sec_row in zip(pub_rows, sec_rows):
        for pub, sec in zip(pub_row, sec_row):
            m0, m1 = _placement(pub.location, sec.share, sec.alpha)
            if not ssot.transcript_valid(pub.transcript, sec.sender_rand, m0, m1):
                return False
    return True


def _row_xor(row: tuple[CellSecret, ...]) -> int:
    acc = 0
    for c in row:
        acc ^= c.share & 1
    return acc


def _check_grid(rows, n_rows: int, lam: int, what: str) -> None:
    if len(rows) != n_rows or any(len(r) != lam for r in rows):
        raise RelationShapeError(f"{what}: expected {n_rows} x {lam} grid")


def relation_zkpok(inst: ZkPokInstance, wit: ZkPokWitness) -> bool:
    n = wit.w.length
    _check_grid(inst.cells, n, inst.lam, "instance")
    _check_grid(wit.cells, n, inst.lam, "witness")
    if inst.ssot is None:
        raise RelationShapeError("instance is not bound to an SSOT functionality")
    if not _cells_consistent(inst.ssot, inst.cells, wit.cells):
        return False
    if any(_row_xor(row) != wit.w[i] for i, row in enumerate(wit.cells)):
        return False
    return inst.base.holds(inst.x, wit.w)


def srot_row_targets(r_prime: int, beta: int, r_star: Bits) -> list[int]:
    """Row secrets for the extraction grid: r', beta, then the bits of r*."""
    return [r_prime & 1, beta & 1] + r_star.to_list()


def relation_srot(inst: SrotInstance, wit: SrotWitness) -> bool:
    lam = inst.lam
    _check_grid(inst.cells, lam + 2, lam, "instance")
    _check_grid(wit.cells, lam + 2, lam, "witness")
    if wit.r_star.length != lam:
        raise RelationShapeError("main-execution randomness must have lambda bits")
    if inst.ssot is None:
        raise RelationShapeError("instance is not bound to an SSOT functionality")
    if not _cells_consistent(inst.ssot, inst.cells, wit.cells):
        return False
    targets = srot_row_targets(wit.r_prime, wit.beta, wit.r_star)
    if any(_row_xor(row) != t for row, t in zip(wit.cells, targets)):
        return False
    return inst.ssot.transcript_valid(
        inst.main, wit.r_star, wit.r_prime & 1, (wit.r_prime ^ wit.beta) & 1
    )


def relation_coinflip(inst: CoinflipInstance, seed: Bits) -> bool:
    return verify_open(inst.rstring, inst.commitment, Opening(inst.a, seed))


def relation_crs_bit(inst: CrsBitInstance, seed: Bits) -> bool:
    a = (inst.crs_bit ^ inst.b) & 1
    return verify_open(inst.rstring, inst.commitment, Opening(a, seed))


PREDICATES: dict[RelationId, Callable[[Any, Any], bool]] = {
    RelationId.RWI: relation_rwi,
    RelationId.RZkPok: relation_zkpok,
    RelationId.RSrotConsistency: relation_srot,
    RelationId.RCoinflipOpen: relation_coinflip,
    RelationId.RCrsBit: relation_crs_bit,
}


# ------------------------------------------------------------------ tokens

@dataclass(frozen=True)
class ProofToken:
    relation: RelationId
    instance_digest: bytes
    valid: bool

    SIZE = 34

    def to_bytes(self) -> bytes:
        return bytes([int(self.relation)]) + self.instance_digest + (b"\x01" if self.valid else b"\x00")

    @classmethod
    def from_bytes(cls, data: bytes) -> "ProofToken":
        if len(data) != cls.SIZE:
            raise ValueError(f"proof token must be {cls.SIZE} bytes")
        return cls(RelationId(data[0]), bytes(data[1:33]), data[33] == 1)


class IdealBackend:
    """Stand-in for witness-indistinguishable / zero-knowledge proofs."""

    name = "ideal"

    def _predicate(self, relation: RelationId):
        try:
            return PREDICATES[RelationId(relation)]
        except (KeyError, ValueError) as exc:
            raise UnknownRelationError(relation) from exc

    def prove(self, relation: RelationId, instance, witness) -> ProofToken:
        ok = bool(self._predicate(relation)(instance, witness))
        return ProofToken(RelationId(relation), instance_digest(relation, instance), ok)

    def verify(self, relation: RelationId, instance, token: ProofToken | bytes | None) -> bool:
        self._predicate(relation)
        if token is None:
            return False
        if isinstance(token, (bytes, bytearray)):
            try:
                token = ProofToken.from_bytes(bytes(token))
            except ValueError:
                return False
        return (
            token.relation == relation
            and token.valid
            and token.instance_digest == instance_digest(relation, instance)
        )

    def simulate(self, relation: RelationId, instance) -> ProofToken:
        """Accepting token without a witness.  Reserved for simulators."""
        self._predicate(relation)
        return ProofToken(RelationId(relation), instance_digest(relation, instance), True)


IDEAL = IdealBackend()


def prove(backend: IdealBackend, relation: RelationId, instance, witness) -> ProofToken:
    return backend.prove(relation, instance, witness)


def verify(backend: IdealBackend, relation: RelationId, instance, token) -> bool:
    return backend.verify(relation, instance, token)


# ------------------------------------------------------ coin-flipped CRS

class CrsAbort(RuntimeError):
    def __init__(self, index: int):
        super().__init__(f"reference-string bit {index}: consistency proof rejected")
        self.index = index


@dataclass
class CrsTranscript:
    setup_rstring: Bits
    messages: list[tuple[str, str, str]] = field(default_factory=list)  # (sender, label, hex)


class HonestCrsProver:
    def choose_b(self, i: int, commitment: Commitment, rng) -> int:
        return int(rng.integers(2))


@dataclass
class FixedBCrsProver:
    b: int

    def choose_b(self, i, commitment, rng) -> int:
        return self.b


class CommitmentPeekingCrsProver:
    """Picks b from the commitment's first bit, hoping to bias the output."""

    def choose_b(self, i, commitment, rng) -> int:
        return commitment.value[0]


class HonestCrsVerifier:
    def reveal(self, i: int, a: int, b: int) -> int:
        return a ^ b


@dataclass
class LyingCrsVerifier:
    """Reveals a flipped bit at position ``index``."""

    index: int

    def reveal(self, i, a, b) -> int:
        return (a ^ b) ^ (1 if i == self.index else 0)


def crs_from_coinflip(
    bit_len: int, prover_role, verifier_role, rng: np.random.Generator,
    seed_len: int = 16, backend: IdealBackend = IDEAL,
) -> tuple[Bits, CrsTranscript]:
    """Per bit: V commits to a, P answers b, V reveals a xor b and proves it.

    The commitment receiver string is sent once by P before bit 0 and is kept
    apart from the per-bit messages.
    """
    if bit_len < 1:
        raise ValueError("bit_len must be >= 1")
    rs = receiver_string(seed_len, rng)
    tr = CrsTranscript(rs)
    out = []
    for i in range(bit_len):
        a = int(rng.integers(2))
        seed = Bits.random(seed_len, rng)
        c = commit(rs, a, seed)
        tr.messages.append(("V", f"commit[{i}]", c.to_hex()))
        b = prover_role.choose_b(i, c, rng) & 1
        tr.messages.append(("P", f"b[{i}]", str(b)))
        crs_i = verifier_role.reveal(i, a, b) & 1
        tr.messages.append(("V", f"crs[{i}]", str(crs_i)))
        inst = CrsBitInstance(rs, c, crs_i, b)
        token = backend.prove(RelationId.RCrsBit, inst, seed)
        tr.messages.append(("V", f"proof[{i}]", token.to_bytes().hex()))
        if not backend.verify(RelationId.RCrsBit, inst, token):
            raise CrsAbort(i)
        out.append(crs_i)
    return Bits.from_iter(out), tr
