"""State machines for the slot-based bounded-concurrent ZK protocol.

Round layout of one session with ``L`` slots (verifier speaks first):

* slot j (1-based): round 3j-2 receiver string (V), 3j-1 commitment (P),
  3j verifier bit b'_j (V);
* rounds 3L+1 .. 3L+4: WI start (V), WI first message (P), WI challenge (V),
  proof token (P).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .backends import IDEAL, HASH_PREIMAGE, ProofToken, RelationId, RwiInstance, RwiWitness, SlotPublic
from .bits import Bits
from .commitment import Commitment, Opening, commit
from .engine import (
    BOT, NA, Abortive, Driver, Engine, Event, Msg, RandomInterleave, RoundRobin,
    Scheduler, TranscriptSet, partition,
)
from .params import ProtocolParams
from .seeding import spawn

WI_NONCE_BYTES = 16


class Phase(str, enum.Enum):
    STAGE1 = "stage1"
    STAGE2 = "stage2"
    DONE = "done"
    ABORTED = "aborted"


class PendingSlotError(RuntimeError):
    pass


@dataclass(frozen=True)
class SlotSecret:
    rstring: Bits
    commitment: Commitment
    bit: int
    seed: Bits


@dataclass(frozen=True)
class SlotRecord:
    index: int  # 1-based
    rstring: Bits
    commitment: Commitment
    committed_bit: int
    seed: Bits
    verifier_bit: int | None
    positions: tuple[int, int, int | None]

    @property
    def matched(self) -> bool:
        return self.verifier_bit is not None and self.committed_bit == self.verifier_bit


def _round_kind(rnd: int, slots: int) -> tuple[str, int]:
    """Classify a round number; returns (kind, slot index 0-based or -1)."""
    if rnd <= 3 * slots:
        j, pos = divmod(rnd - 1, 3)
        return ("r", "c", "b")[pos], j
    return ("s2start", "s2first", "s2chal", "s2token")[rnd - 3 * slots - 1], -1


def _stage2_instance(x, params: ProtocolParams, slots, base) -> RwiInstance:
    return RwiInstance(x, tuple(slots), params.threshold, base)


# ------------------------------------------------------------------ prover

class Prover:
    """Responder side.  Subclasses override the bit rule and Stage-2 witness."""

    def __init__(self, params: ProtocolParams, x: bytes, w: Bits | None, seed_len: int,
                 backend=IDEAL, base=HASH_PREIMAGE):
        self.params = params
        self.x = x
        self._w = w
        self.seed_len = seed_len
        self.backend = backend
        self.base = base
        self.phase = Phase.STAGE1
        self.expected_round: int | None = 1
        self._slots: list[SlotSecret] = []
        self._vbits: list[int] = []
        self.stage2_witness_ok: bool | None = None

    # hooks
    def choose_bit(self, j: int, rng: np.random.Generator) -> int:
        return int(rng.integers(2))

    def stage2_witness(self) -> RwiWitness:
        return RwiWitness(self._w, ())

    # harness access only
    def secrets_handle(self) -> list[SlotSecret]:
        return list(self._slots)

    def verifier_bits(self) -> list[int]:
        return list(self._vbits)

    def _abort(self):
        self.phase = Phase.ABORTED
        self.expected_round = None
        return None

    def respond(self, rnd: int, body: bytes, rng: np.random.Generator) -> bytes | None:
        if self.expected_round is None or rnd != self.expected_round:
            return self._abort()
        L = self.params.slots
        kind, j = _round_kind(rnd, L)
        if kind == "r":
            n = self.seed_len
            if len(body) != (3 * n + 7) // 8:
                return self._abort()
            rs = Bits.from_bytes(body, 3 * n)
            bit = self.choose_bit(j, rng) & 1
            seed = Bits.random(n, rng)
            c = commit(rs, bit, seed)
            self._slots.append(SlotSecret(rs, c, bit, seed))
            self.expected_round = rnd + 2
            return c.value.to_bytes()
        if kind == "b":
            self._vbits.append(body[0] & 1 if body else 0)
            self.expected_round = rnd + 1
            if j == L - 1:
                self.phase = Phase.STAGE2
            return None
        if kind == "s2start":
            self.expected_round = rnd + 2
            return rng.bytes(WI_NONCE_BYTES)
        if kind == "s2chal":
            slots = [SlotPublic(s.rstring, s.commitment, v) for s, v in zip(self._slots, self._vbits)]
            inst = _stage2_instance(self.x, self.params, slots, self.base)
            token = self.backend.prove(RelationId.RWI, inst, self.stage2_witness())
            self.stage2_witness_ok = token.valid
            self.phase = Phase.DONE
            self.expected_round = None
            return token.to_bytes()
        return self._abort()


class HonestProver(Prover):
    pass


def matched_openings(prover: Prover, limit: int | None = None) -> tuple[Opening | None, ...]:
    """Openings for matched slots (lexicographically first ``limit``), ⊥ elsewhere."""
    out: list[Opening | None] = []
    used = 0
    for s, v in zip(prover._slots, prover._vbits):
        if s.bit == v and (limit is None or used < limit):
            out.append(Opening(s.bit, s.seed))
            used += 1
        else:
            out.append(None)
    return tuple(out)


# ---------------------------------------------------------------- verifier

class Verifier:
    """Honest per-session verifier (initiator)."""

    def __init__(self, params: ProtocolParams, x: bytes, seed_len: int,
                 backend=IDEAL, base=HASH_PREIMAGE):
        self.params = params
        self.x = x
        self.seed_len = seed_len
        self.backend = backend
        self.base = base
        self.next_round = 1
        self.finished = False
        self.accepted: bool | None = None
        self._rstrings: list[Bits] = []
        self._coms: list[Commitment] = []
        self._vbits: list[int] = []
        self.c_positions: list[int] = []

    def choose_bit(self, j: int, rng: np.random.Generator) -> int:
        return int(rng.integers(2))

    def next_kind(self) -> str:
        return _round_kind(self.next_round, self.params.slots)[0]

    def next_message(self, rng: np.random.Generator) -> Msg:
        r = self.next_round
        kind, j = _round_kind(r, self.params.slots)
        if kind == "r":
            rs = Bits.random(3 * self.seed_len, rng)
            self._rstrings.append(rs)
            return Msg(r, rs.to_bytes())
        if kind == "b":
            vb = self.choose_bit(j, rng) & 1
            self._vbits.append(vb)
            return Msg(r, bytes([vb]))
        return Msg(r, rng.bytes(WI_NONCE_BYTES))

    def _reject(self):
        self.finished = True
        self.accepted = False

    def receive(self, payload: Any) -> None:
        r = self.next_round
        kind, j = _round_kind(r, self.params.slots)
        if payload is BOT:
            self._reject()
            return
        if kind == "b":
            self.next_round = r + 1
            return
        if payload is NA or not isinstance(payload, Msg) or payload.round != r + 1:
            self._reject()
            return
        if kind == "r":
            n3 = 3 * self.seed_len
            if len(payload.body) != (n3 + 7) // 8:
                self._reject()
                return
            try:
                self._coms.append(Commitment(Bits.from_bytes(payload.body, n3)))
            except ValueError:
                self._reject()
                return
            self.next_round = r + 2
        elif kind == "s2start":
            self.next_round = r + 2
        elif kind == "s2chal":
            slots = [SlotPublic(a, c, v) for a, c, v in zip(self._rstrings, self._coms, self._vbits)]
            inst = _stage2_instance(self.x, self.params, slots, self.base)
            self.accepted = self.backend.verify(RelationId.RWI, inst, payload.body)
            self.finished = True
        else:
            self._reject()


class _FixedBits(Verifier):
    def __init__(self, *a, bit: int = 0, **kw):
        super().__init__(*a, **kw)
        self.fixed = bit

    def choose_bit(self, j, rng):
        return self.fixed


# ------------------------------------------------------------- schedulers

class TapeScheduler(Scheduler):
    """Chooses the next speaker from a private tape mixed with the last
    commitment bytes it has seen, so the schedule depends on its state."""

    def __init__(self, seed):
        self.rng = np.random.default_rng(seed)

    def choose(self, candidates, position, driver):
        if len(candidates) == 1:
            return candidates[0]
        state = 0
        for v in driver.initiators:
            if v._coms:
                state ^= v._coms[-1].value.value & 0xFF
        tape = int(self.rng.integers(256))
        return candidates[(state + tape) % len(candidates)]


class SlotStaggerScheduler(Scheduler):
    """Tries to place every commitment at the end of a block and the matching
    verifier bit at the start of the next one."""

    def __init__(self, block_len: int, seed):
        self.block_len = block_len
        self.rng = np.random.default_rng(seed)

    def choose(self, candidates, position, driver):
        bl = self.block_len
        block_start = position - position % bl
        rem = bl - position % bl
        kinds = {c: driver.initiators[c].next_kind() for c in candidates}
        # a bit whose commitment sits in an earlier block cannot complete a slot here
        stale = [c for c in candidates if kinds[c] == "b"
                 and driver.initiators[c].c_positions
                 and driver.initiators[c].c_positions[-1] < block_start]
        if stale:
            return stale[0]
        other = [c for c in candidates if kinds[c].startswith("s2")]
        if other:
            return other[0]
        openers = [c for c in candidates if kinds[c] == "r"]
        if openers and rem >= 2:
            # the matching bit is held back until the next block
            return openers[0]
        return candidates[int(self.rng.integers(len(candidates)))]


class BlockAbort(Scheduler):
    """Behaves like ``inner`` until block ``k`` starts, then aborts every session."""

    def __init__(self, k: int, block_len: int, inner: Scheduler):
        self.k = k
        self.block_len = block_len
        self.inner = inner
        self._aborting = False

    def choose(self, candidates, position, driver):
        self._aborting = position >= self.k * self.block_len
        return self.inner.choose(candidates, position, driver)

    def tamper(self, session, msg):
        return Msg(msg.round + 1, msg.body) if self._aborting else msg


# ------------------------------------------------------------- adversaries

class TrackingDriver(Driver):
    """Driver that records where each session's commitments landed."""

    def deliver(self, session, payload):
        v = self.initiators[session]
        if isinstance(payload, Msg) and v.next_kind() == "r":
            v.c_positions.append(self.position + 1)
        super().deliver(session, payload)


class Silent(Driver):
    """Never sends anything: every block is empty."""

    def __init__(self, q: int):
        super().__init__([], RoundRobin(), np.random.default_rng(0))
        self._q = q

    @property
    def q(self):
        return self._q

    def next_live(self, position):
        return None


@dataclass(frozen=True)
class AdversarySpec:
    """Named recipe for a concurrent verifier; ``build`` makes a fresh one."""

    name: str
    kind: str
    arg: Any = None

    def build(self, params: ProtocolParams, x: bytes, seed: Any, seed_len: int,
              backend=IDEAL, base=HASH_PREIMAGE) -> Driver:
        coin_ss, sched_ss, extra_ss = spawn(seed, 3)
        rng = np.random.default_rng(coin_ss)
        q = params.q
        kw = dict(backend=backend, base=base)
        if self.kind == "silent":
            return Silent(q)
        if self.kind == "fixed_bits":
            vs = [_FixedBits(params, x, seed_len, bit=int(self.arg), **kw) for _ in range(q)]
        else:
            vs = [Verifier(params, x, seed_len, **kw) for _ in range(q)]
        base_sched = RandomInterleave(sched_ss)
        if self.kind in ("honest", "fixed_bits"):
            sched: Scheduler = base_sched
        elif self.kind == "round_robin":
            sched = RoundRobin()
        elif self.kind == "state_dependent":
            sched = TapeScheduler(sched_ss)
        elif self.kind == "slot_stagger":
            sched = SlotStaggerScheduler(params.block_len, sched_ss)
        elif self.kind == "aborter":
            sched = Abortive(float(self.arg), extra_ss, inner=base_sched)
        elif self.kind == "all_abort_in_block":
            sched = BlockAbort(int(self.arg), params.block_len, base_sched)
        else:
            raise ValueError(f"unknown adversary kind {self.kind!r}")
        return TrackingDriver(vs, sched, rng)


def HonestLike() -> AdversarySpec:
    return AdversarySpec("HonestLike", "honest")


def RoundRobinHonest() -> AdversarySpec:
    return AdversarySpec("RoundRobin", "round_robin")


def FixedBits(b: int) -> AdversarySpec:
    return AdversarySpec(f"FixedBits({b})", "fixed_bits", b)


def StateDependentScheduling() -> AdversarySpec:
    return AdversarySpec("StateDependentScheduling", "state_dependent")


def SlotStaggerer() -> AdversarySpec:
    return AdversarySpec("SlotStaggerer", "slot_stagger")


def Aborter(p: float) -> AdversarySpec:
    return AdversarySpec(f"Aborter({p})", "aborter", p)


def AllAbortInBlock(k: int) -> AdversarySpec:
    return AdversarySpec(f"AllAbortInBlock({k})", "all_abort_in_block", k)


def SilentAdversary() -> AdversarySpec:
    return AdversarySpec("Silent", "silent")


def adversary_library() -> list[AdversarySpec]:
    return [
        HonestLike(), FixedBits(0), FixedBits(1), StateDependentScheduling(),
        SlotStaggerer(), Aborter(0.01), AllAbortInBlock(2),
    ]


# ------------------------------------------------------------ harness glue

def default_seed_len(params: ProtocolParams) -> int:
    return 8 * params.lam


def run_protocol(
    params: ProtocolParams, adversary: AdversarySpec, seed: Any, *,
    prover_factory: Callable[..., Prover] | None = None, x: bytes | None = None,
    w: Bits | None = None, seed_len: int | None = None, witness_bits: int = 16,
) -> tuple[TranscriptSet, list[Prover], Driver]:
    """One real (non-simulated) execution of Q sessions."""
    from .engine import run

    inst_ss, adv_ss, prover_ss = spawn(seed, 3)
    n = seed_len if seed_len is not None else default_seed_len(params)
    if x is None:
        x, w = HASH_PREIMAGE.sample(witness_bits, np.random.default_rng(inst_ss))
    factory = prover_factory or (lambda: HonestProver(params, x, w, n))
    provers = [factory() for _ in range(params.q)]
    driver = adversary.build(params, x, adv_ss, n)
    engine = Engine(provers, params.prot_len)
    tr = run(engine, driver, np.random.default_rng(prover_ss), seed=None)
    return tr, provers, driver


def slot_records(transcript: TranscriptSet, session: int, secrets: list[SlotSecret]) -> list[SlotRecord]:
    """Join prover secrets with message positions from the global order."""
    pos: dict[tuple[int, str], int] = {}
    vbits: dict[int, int] = {}
    n_slots = len(secrets)
    for k, e in enumerate(transcript.events):
        if e.session != session or e.round is None or e.round > 3 * n_slots:
            continue
        j, p = divmod(e.round - 1, 3)
        kind = "rcb"[p]
        pos[(j, kind)] = k
        if kind == "b" and e.body:
            vbits[j] = e.body[0] & 1
    out = []
    for j, s in enumerate(secrets):
        out.append(SlotRecord(
            j + 1, s.rstring, s.commitment, s.bit, s.seed, vbits.get(j),
            (pos.get((j, "r"), -1), pos.get((j, "c"), -1), pos.get((j, "b"))),
        ))
    return out


def matched_count(transcript: TranscriptSet, session: int, secrets: list[SlotSecret]) -> int:
    recs = slot_records(transcript, session, secrets)
    if any(r.verifier_bit is None for r in recs):
        raise PendingSlotError("slot without verifier response")
    return sum(r.matched for r in recs)


def complete_slots(events, lo: int, hi: int | None, slots: int, with_bits: bool = False) -> list:
    """(session, slot) pairs whose commitment and verifier bit both lie in
    events[lo:hi]; with ``with_bits`` each entry also carries the verifier bit."""
    seen_c = set()
    done = []
    for e in events[lo:hi]:
        if e.round is None or e.round > 3 * slots:
            continue
        j, p = divmod(e.round - 1, 3)
        if p == 1:
            seen_c.add((e.session, j))
        elif p == 2 and (e.session, j) in seen_c:
            done.append((e.session, j, e.body[0] & 1) if with_bits else (e.session, j))
    return done


def blocks_without_slots(transcript: TranscriptSet, params: ProtocolParams) -> int:
    n = 0
    for b in range(params.blocks):
        lo = b * params.block_len
        hi = lo + params.block_len if b < params.blocks - 1 else len(transcript.events)
        if not complete_slots(transcript.events, lo, hi, params.slots):
            n += 1
    return n
