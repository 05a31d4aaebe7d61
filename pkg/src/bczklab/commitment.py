"""Naor-style two-message bit commitment over a SHA-256 counter-mode PRG.

The receiver first sends a random string ``r`` of length 3n.  To commit to
``bit`` with an n-bit seed ``s`` the committer sends ``G(s)`` when ``bit`` is 0
and ``G(s) xor r`` when ``bit`` is 1, where ``G`` stretches n bits to 3n bits.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from itertools import product

import numpy as np

from .bits import Bits

MAX_PRG_BITS = 1 << 16
MAX_SEARCH_N = 12


class CommitmentLengthError(ValueError):
    """Raised when receiver string, commitment and seed lengths disagree."""


def prg(seed: Bits, out_len: int) -> Bits:
    """Expand ``seed`` to ``out_len`` bits: SHA-256(seed bytes || counter) blocks.

    The counter is a 4-byte big-endian integer starting at 0.
    """
    if out_len < 0 or out_len > MAX_PRG_BITS:
        raise ValueError(f"out_len must lie in [0, {MAX_PRG_BITS}]")
    if out_len == 0:
        return Bits(0, 0)
    sb = seed.to_bytes()
    nblocks = (out_len + 255) // 256
    if nblocks == 1:
        raw = hashlib.sha256(sb + b"\x00\x00\x00\x00").digest()
    else:
        raw = b"".join(
            hashlib.sha256(sb + c.to_bytes(4, "big")).digest() for c in range(nblocks)
        )
    return Bits(int.from_bytes(raw, "big") >> (256 * nblocks - out_len), out_len)


@dataclass(frozen=True)
class Commitment:
    value: Bits

    def to_hex(self) -> str:
        return self.value.to_hex()

    @classmethod
    def from_hex(cls, text: str, length: int) -> "Commitment":
        return cls(Bits.from_hex(text, length))


@dataclass(frozen=True)
class Opening:
    bit: int
    seed: Bits

    def to_hex(self) -> str:
        return f"{self.bit}:{self.seed.to_hex()}"

    @classmethod
    def from_hex(cls, text: str, seed_len: int) -> "Opening":
        b, s = text.split(":")
        return cls(int(b), Bits.from_hex(s, seed_len))


def receiver_string(n: int, rng: np.random.Generator) -> Bits:
    return Bits.random(3 * n, rng)


def _check_lengths(rstring: Bits, seed: Bits) -> None:
    if rstring.length != 3 * seed.length:
        raise CommitmentLengthError(
            f"receiver string has {rstring.length} bits, expected 3*{seed.length}"
        )


def commit(rstring: Bits, bit: int, seed: Bits) -> Commitment:
    _check_lengths(rstring, seed)
    g = prg(seed, rstring.length)
    return Commitment(g ^ rstring if bit else g)


def verify_open(rstring: Bits, com: Commitment, opening: Opening) -> bool:
    _check_lengths(rstring, opening.seed)
    if com.value.length != rstring.length:
        raise CommitmentLengthError(
            f"commitment has {com.value.length} bits, expected {rstring.length}"
        )
    if opening.bit not in (0, 1):
        return False
    return commit(rstring, opening.bit, opening.seed) == com


def _all_seeds(n: int):
    return (Bits(v, n) for v in range(1 << n))


def binding_collision_search(n: int, rstring: Bits) -> list[tuple[Bits, Bits]]:
    """All seed pairs (s0, s1) with prg(s0) == prg(s1) xor rstring.

    Each pair lets a committer open the same commitment as 0 (with s0) and as
    1 (with s1).  Output is sorted by (s0, s1).
    """
    if n > MAX_SEARCH_N:
        raise ValueError(f"exhaustive search refused for n={n} > {MAX_SEARCH_N}")
    if rstring.length != 3 * n:
        raise CommitmentLengthError("receiver string must have 3n bits")
    table: dict[int, list[int]] = {}
    for s in range(1 << n):
        table.setdefault(prg(Bits(s, n), 3 * n).value, []).append(s)
    pairs = []
    for s1 in range(1 << n):
        target = prg(Bits(s1, n), 3 * n).value ^ rstring.value
        for s0 in table.get(target, ()):
            pairs.append((s0, s1))
    pairs.sort()
    return [(Bits(a, n), Bits(b, n)) for a, b in pairs]


def brute_force_open(rstring: Bits, com: Commitment, n: int) -> list[Opening]:
    """Every opening of ``com``, found by trying all seeds and both bits.

    Only feasible for small n; used by unbounded simulators in tests and demos.
    """
    if n > 20:
        raise ValueError("brute force limited to n <= 20")
    out = []
    for bit, s in product((0, 1), range(1 << n)):
        op = Opening(bit, Bits(s, n))
        if commit(rstring, bit, op.seed) == com:
            out.append(op)
    return out
