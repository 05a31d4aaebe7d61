"""Fixed-length bit strings backed by Python integers.

Bit 0 is the leftmost (most significant) bit, so ``Bits.from_str("10")``
has value 2.  Instances are immutable and hashable.
"""
from __future__ import annotations

from typing import Iterable

import numpy as np


class Bits:
    __slots__ = ("value", "length")

    def __init__(self, value: int, length: int):
        if length < 0:
            raise ValueError("negative length")
        if value < 0 or value >> length:
            raise ValueError(f"value does not fit in {length} bits")
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "length", length)

    def __setattr__(self, name, val):  # immutability
        raise AttributeError("Bits is immutable")

    def __reduce__(self):
        return (Bits, (self.value, self.length))

    def __deepcopy__(self, memo):
        return self

    def __copy__(self):
        return self

    # construction
    @classmethod
    def zeros(cls, length: int) -> "Bits":
        return cls(0, length)

    @classmethod
    def from_str(cls, s: str) -> "Bits":
        return cls(int(s, 2) if s else 0, len(s))

    @classmethod
    def from_iter(cls, bits: Iterable[int]) -> "Bits":
        v, n = 0, 0
        for b in bits:
            v = (v << 1) | (int(b) & 1)
            n += 1
        return cls(v, n)

    @classmethod
    def random(cls, length: int, rng: np.random.Generator) -> "Bits":
        if length == 0:
            return cls(0, 0)
        nbytes = (length + 7) // 8
        v = int.from_bytes(rng.bytes(nbytes), "big") >> (8 * nbytes - length)
        return cls(v, length)

    @classmethod
    def from_hex(cls, text: str, length: int) -> "Bits":
        return cls(int(text, 16) if text else 0, length)

    @classmethod
    def from_bytes(cls, data: bytes, length: int) -> "Bits":
        """Inverse of :meth:`to_bytes`."""
        v = int.from_bytes(data, "big")
        return cls(v, length)

    # views
    def to_hex(self) -> str:
        width = (self.length + 3) // 4
        return format(self.value, f"0{width}x") if width else ""

    def to_bytes(self) -> bytes:
        return self.value.to_bytes((self.length + 7) // 8, "big")

    def to_list(self) -> list[int]:
        n, v = self.length, self.value
        return [(v >> (n - 1 - i)) & 1 for i in range(n)]

    def to_array(self) -> np.ndarray:
        return np.array(self.to_list(), dtype=np.uint8)

    def count(self) -> int:
        return bin(self.value).count("1")

    # operators
    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i: int) -> int:
        if i < 0:
            i += self.length
        if not 0 <= i < self.length:
            raise IndexError(i)
        return (self.value >> (self.length - 1 - i)) & 1

    def __xor__(self, other: "Bits") -> "Bits":
        if self.length != other.length:
            raise ValueError(f"length mismatch: {self.length} vs {other.length}")
        return Bits(self.value ^ other.value, self.length)

    def __add__(self, other: "Bits") -> "Bits":
        """Concatenation."""
        return Bits((self.value << other.length) | other.value, self.length + other.length)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Bits)
            and self.length == other.length
            and self.value == other.value
        )

    def __lt__(self, other: "Bits") -> bool:
        return (self.length, self.value) < (other.length, other.value)

    def __hash__(self) -> int:
        return hash((self.value, self.length))

    def __repr__(self) -> str:
        if self.length <= 32:
            return f"Bits('{format(self.value, f'0{self.length}b') if self.length else ''}')"
        return f"Bits(0x{self.to_hex()}, {self.length})"
