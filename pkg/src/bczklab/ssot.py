"""Ideal two-round sender-private oblivious transfer.

A trusted party hands out opaque random handles.  The receiver gets ``ot1``
for its choice bit; the sender answers with ``ot2`` for its inputs; the
trusted party delivers ``m_beta`` on reconstruction.  Handles carry no
information about inputs.  Validity of a transcript with respect to the
sender's randomness and inputs is decided by the trusted party's records,
which is what an NP relation over a concrete transcript would check.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bits import Bits

HANDLE_BYTES = 16


@dataclass(frozen=True)
class SsotTranscript:
    ot1: bytes
    ot2: bytes

    def canonical(self):
        return (self.ot1, self.ot2)

    def to_hex(self) -> str:
        return self.ot1.hex() + ":" + self.ot2.hex()


@dataclass(frozen=True)
class ReceiverState:
    ot1: bytes
    beta: int


class SsotError(RuntimeError):
    pass


class IdealSsot:
    """Trusted party for many SSOT executions.

    Handles are drawn from ``rng`` so runs are reproducible.
    """

    def __init__(self, rng: np.random.Generator):
        self._rng = rng
        self._receivers: dict[bytes, int] = {}
        self._senders: dict[bytes, tuple[bytes, Bits, int, int]] = {}

    def receiver_round(self, beta: int) -> tuple[bytes, ReceiverState]:
        if beta not in (0, 1):
            raise SsotError("receiver bit must be 0 or 1")
        ot1 = self._rng.bytes(HANDLE_BYTES)
        self._receivers[ot1] = beta
        return ot1, ReceiverState(ot1, beta)

    def sender_round(self, ot1: bytes, m0: int, m1: int, sender_rand: Bits) -> bytes:
        if ot1 not in self._receivers:
            raise SsotError("unknown first-round handle")
        ot2 = self._rng.bytes(HANDLE_BYTES)
        self._senders[ot2] = (ot1, sender_rand, m0 & 1, m1 & 1)
        return ot2

    def reconstruct(self, ot2: bytes, state: ReceiverState) -> int:
        ot1, _, m0, m1 = self._senders[ot2]
        if ot1 != state.ot1:
            raise SsotError("second-round handle does not answer this receiver")
        return m1 if state.beta else m0

    def transcript_valid(self, tr: SsotTranscript, sender_rand: Bits, m0: int, m1: int) -> bool:
        rec = self._senders.get(tr.ot2)
        if rec is None:
            return False
        return rec == (tr.ot1, sender_rand, m0 & 1, m1 & 1)

    # test-only tap: not used by any protocol party
    def extract_receiver_bit(self, ot1: bytes) -> int:
        return self._receivers[ot1]

    def __deepcopy__(self, memo):
        # a rewound party must not forget handles already issued; the
        # trusted party is shared across branches
        return self


def ssot_run(
    beta: int, m0: int, m1: int, rng: np.random.Generator, ssot: IdealSsot | None = None,
    sender_rand_bits: int = 8,
) -> tuple[int, SsotTranscript]:
    """One full execution; returns the receiver output and the transcript."""
    f = ssot if ssot is not None else IdealSsot(rng)
    ot1, st = f.receiver_round(beta)
    r = Bits.random(sender_rand_bits, rng)
    ot2 = f.sender_round(ot1, m0, m1, r)
    return f.reconstruct(ot2, st), SsotTranscript(ot1, ot2)
