"""Proof of knowledge with witness bits secret-shared across SSOT executions.

The prover deals each witness bit into ``lam`` XOR shares, sends (share, mask)
in an order fixed by a location bit per cell, reveals the location, and
finally proves consistency (relation RZkPok) through the ideal backend.  The
extractor plays receiver with a uniform bit per cell and rewinds the prover
to the cell's checkpoint until its bit equals the revealed location.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Hashable

import numpy as np

from .backends import (
    HASH_PREIMAGE, IDEAL, CellPublic, CellSecret, RelationId, ZkPokInstance, ZkPokWitness,
)
from .bits import Bits
from .engine import (
    BOT, NA, BlockStaggered, Driver, Engine, Msg, RandomInterleave, advance,
)
from .params import ProtocolParams
from .seeding import child, rng_for
from .ssot import IdealSsot, SsotTranscript
from .stats import GeometricFit, empirical_tv, geometric_fit


class NotRestartableError(TypeError):
    """The extractor needs a prover that supports checkpoint and restore."""


@dataclass(frozen=True)
class ShareMatrix:
    shares: tuple[tuple[int, ...], ...]
    alphas: tuple[tuple[int, ...], ...]
    locations: tuple[tuple[int, ...], ...]

    @classmethod
    def deal(cls, w: Bits, lam: int, rng: np.random.Generator) -> "ShareMatrix":
        n = w.length
        sh = rng.integers(0, 2, (n, lam))
        for i in range(n):
            sh[i, -1] = w[i] ^ (int(sh[i, :-1].sum()) & 1)
        al = rng.integers(0, 2, (n, lam))
        loc = rng.integers(0, 2, (n, lam))
        to_t = lambda a: tuple(tuple(int(v) for v in row) for row in a)  # noqa: E731
        return cls(to_t(sh), to_t(al), to_t(loc))

    @property
    def rows(self) -> int:
        return len(self.shares)

    def row_xor(self, i: int) -> int:
        acc = 0
        for v in self.shares[i]:
            acc ^= v
        return acc

    def shares_witness(self, w: Bits) -> bool:
        return all(self.row_xor(i) == w[i] for i in range(w.length))

    def placement(self, i: int, j: int, loc: int | None = None) -> tuple[int, int]:
        loc = self.locations[i][j] if loc is None else loc
        s, a = self.shares[i][j], self.alphas[i][j]
        return (a, s) if loc else (s, a)


# ---------------------------------------------------------------- provers

class PokProver:
    """Honest prover.  All mutable state is the coin generator plus
    append-only logs, so a checkpoint is the generator state and log lengths."""

    name = "Honest"
    restartable = True
    _logs = ("cells", "tape", "seen", "overrides")

    def __init__(self, x: bytes, w: Bits, lam: int, ssot: IdealSsot, seed: Any, base=HASH_PREIMAGE):
        self.x, self.w, self.lam, self.ssot, self.base = x, w, lam, ssot, base
        self.rng = rng_for(seed)
        self.matrix = ShareMatrix.deal(self.shared_witness(), lam, self.rng)
        self.post_deal()
        self.cells: list[tuple[CellPublic, CellSecret]] = []
        self.tape: list[int] = []
        self.seen: list[int] = []
        self.overrides: list[tuple[int, int, int]] = []
        self.aborted = False

    # hooks
    def shared_witness(self) -> Bits:
        return self.w

    def claimed_witness(self) -> Bits:
        return self.w

    def post_deal(self) -> None:
        pass

    def on_cell(self, i: int, j: int, ot1: bytes) -> None:
        pass

    def abort_before_zk(self) -> bool:
        return False

    # protocol
    def location(self, i: int, j: int) -> int:
        for oi, oj, loc in reversed(self.overrides):
            if (oi, oj) == (i, j):
                return loc
        return self.matrix.locations[i][j]

    def send(self, i: int, j: int, ot1: bytes) -> bytes:
        self.on_cell(i, j, ot1)
        loc = self.location(i, j)
        m0, m1 = self.matrix.placement(i, j, loc)
        srand = Bits.random(self.lam, self.rng)
        ot2 = self.ssot.sender_round(ot1, m0, m1, srand)
        self.cells.append((
            CellPublic(SsotTranscript(ot1, ot2), loc),
            CellSecret(srand, self.matrix.shares[i][j], self.matrix.alphas[i][j]),
        ))
        return ot2

    def reveal(self, i: int, j: int) -> int:
        return self.location(i, j)

    def _grid(self, k: int):
        lam = self.lam
        items = [c[k] for c in self.cells]
        return tuple(tuple(items[r * lam:(r + 1) * lam]) for r in range(len(items) // lam))

    def zk(self) -> bytes:
        if self.abort_before_zk():
            self.aborted = True
            return b""
        inst = ZkPokInstance(self.x, self.lam, self._grid(0), self.base, self.ssot)
        wit = ZkPokWitness(self.claimed_witness(), self._grid(1))
        return IDEAL.prove(RelationId.RZkPok, inst, wit).to_bytes()

    # restart contract
    def checkpoint(self):
        return (copy.deepcopy(self.rng.bit_generator.state),
                tuple(len(getattr(self, k)) for k in self._logs), self.aborted)

    def restore(self, cp) -> None:
        state, lens, aborted = cp
        self.rng.bit_generator.state = copy.deepcopy(state)
        for k, n in zip(self._logs, lens):
            del getattr(self, k)[n:]
        self.aborted = aborted

    def final_state(self) -> Hashable:
        return (len(self.cells), self.aborted)



class AborterProver(PokProver):
    name = "Aborter"

    def __init__(self, *a, p: float = 0.3, **kw):
        self.p = p
        super().__init__(*a, **kw)

    def abort_before_zk(self):
        return bool(self.rng.random() < self.p)


class ShareCorruptorProver(PokProver):
    """Flips the share in ``k`` random cells after dealing."""

    name = "ShareCorruptor"

    def __init__(self, *a, k: int = 1, **kw):
        self.k = k
        super().__init__(*a, **kw)

    def post_deal(self):
        m = self.matrix
        n, lam = m.rows, self.lam
        picks = self.rng.choice(n * lam, size=min(self.k, n * lam), replace=False)
        sh = [list(r) for r in m.shares]
        for p in picks:
            i, j = divmod(int(p), lam)
            sh[i][j] ^= 1
        self.matrix = ShareMatrix(tuple(map(tuple, sh)), m.alphas, m.locations)


class ZeroWitnessProver(PokProver):
    name = "ZeroWitness"

    def shared_witness(self):
        return Bits.zeros(self.w.length)

    claimed_witness = shared_witness


class BitLeakerProver(PokProver):
    """Reads the receiver's bit through the SSOT test tap and places the share
    at the other position, so the location depends on the extractor's bit."""

    name = "BitLeaker"

    def on_cell(self, i, j, ot1):
        beta = self.ssot.extract_receiver_bit(ot1)
        self.overrides.append((i, j, beta ^ 1))


class CoinTapeProver(PokProver):
    """Draws one extra coin per witness row; its final state is that tape."""

    name = "CoinTape"

    def on_cell(self, i, j, ot1):
        if j == 0:
            self.tape.append(int(self.rng.integers(2)))

    def final_state(self):
        return tuple(self.tape)


class BetaRecorderProver(PokProver):
    """Records every receiver bit it observes; final state is how many were 1."""

    name = "BetaRecorder"

    def on_cell(self, i, j, ot1):
        self.seen.append(self.ssot.extract_receiver_bit(ot1))

    def final_state(self):
        return sum(self.seen)


class DeterministicProver(PokProver):
    """Ignores the supplied seed; every run uses the same coins."""

    name = "Deterministic"

    def __init__(self, x, w, lam, ssot, seed, base=HASH_PREIMAGE):
        super().__init__(x, w, lam, ssot, 0, base)


class FrozenProver(PokProver):
    name = "Frozen"
    restartable = False


@dataclass(frozen=True)
class ProverSpec:
    name: str
    cls: type
    kwargs: tuple = ()

    def build(self, x, w, lam, ssot, seed) -> PokProver:
        return self.cls(x, w, lam, ssot, seed, **dict(self.kwargs))


def Honest() -> ProverSpec:
    return ProverSpec("Honest", PokProver)


def Aborter(p: float = 0.3) -> ProverSpec:
    return ProverSpec(f"Aborter({p})", AborterProver, (("p", p),))


def ShareCorruptor(k: int = 1) -> ProverSpec:
    return ProverSpec(f"ShareCorruptor({k})", ShareCorruptorProver, (("k", k),))


def ZeroWitness() -> ProverSpec:
    return ProverSpec("ZeroWitness", ZeroWitnessProver)


def BitLeaker() -> ProverSpec:
    return ProverSpec("BitLeaker", BitLeakerProver)


def CoinTape() -> ProverSpec:
    return ProverSpec("CoinTape", CoinTapeProver)


def BetaRecorder() -> ProverSpec:
    return ProverSpec("BetaRecorder", BetaRecorderProver)


def Deterministic() -> ProverSpec:
    return ProverSpec("Deterministic", DeterministicProver)


def prover_suite() -> list[ProverSpec]:
    return [Honest(), Aborter(0.3), ShareCorruptor(1)]


# ------------------------------------------------------------ honest run

@dataclass
class PokTranscript:
    cells: list[CellPublic]
    outputs: list[int]
    token: bytes

    def to_record(self) -> dict[str, Any]:
        return {
            "cells": [{"transcript": c.transcript.to_hex(), "location": c.location} for c in self.cells],
            "outputs": "".join(map(str, self.outputs)),
            "token": self.token.hex(),
        }


def _verifier_instance(x, lam, cells, base, ssot):
    grid = tuple(tuple(cells[r * lam:(r + 1) * lam]) for r in range(len(cells) // lam))
    return ZkPokInstance(x, lam, grid, base, ssot)


def _instance(n_bits: int, seed) -> tuple[bytes, Bits]:
    return HASH_PREIMAGE.sample(n_bits, rng_for(child(seed, 3)))


def pok_run(
    x: bytes, w: Bits, lam: int, seed: Any = 0, prover: ProverSpec | None = None,
    verifier_bit: str = "zero",
) -> tuple[bool, PokTranscript, PokProver]:
    """Honest-verifier execution.  ``verifier_bit="zero"`` is the protocol's
    receiver input; ``"uniform"`` draws a fresh bit per cell instead."""
    spec = prover if prover is not None else Honest()
    f = IdealSsot(rng_for(child(seed, 0)))
    p = spec.build(x, w, lam, f, child(seed, 1))
    vrng = rng_for(child(seed, 2))
    cells, outs = [], []
    for i in range(w.length):
        for j in range(lam):
            beta = 0 if verifier_bit == "zero" else int(vrng.integers(2))
            ot1, st = f.receiver_round(beta)
            ot2 = p.send(i, j, ot1)
            outs.append(f.reconstruct(ot2, st))
            cells.append(CellPublic(SsotTranscript(ot1, ot2), p.reveal(i, j)))
    token = p.zk()
    ok = IDEAL.verify(RelationId.RZkPok, _verifier_instance(x, lam, cells, HASH_PREIMAGE, f), token)
    return ok, PokTranscript(cells, outs, token), p


# -------------------------------------------------------------- extractor

@dataclass
class ExtractionRecord:
    betas: list[list[int]]
    attempts: list[list[int]]
    matched: list[list[bool]]
    recovered: list[list[int | None]]
    witness: Bits | None
    accepted: bool
    forced_continues: int
    transcript_cells: int

    @property
    def success(self) -> bool:
        return self.witness is not None

    def to_record(self) -> dict[str, Any]:
        return {
            "betas": ["".join(map(str, r)) for r in self.betas],
            "attempts": self.attempts,
            "matched": ["".join("1" if m else "0" for m in r) for r in self.matched],
            "witness": None if self.witness is None else self.witness.to_hex(),
            "accepted": self.accepted,
            "forced_continues": self.forced_continues,
            "transcript_cells": self.transcript_cells,
        }


def _search_cell(p: PokProver, f: IdealSsot, i: int, j: int, rng, retry_cap: int):
    """Try uniform receiver bits, restoring ``p`` after each mismatch.

    Leaves ``p`` in the state after the kept attempt and returns
    ``(beta, attempts, matched, cell, value)``.
    """
    cp = p.checkpoint()
    for attempt in range(1, retry_cap + 1):
        beta = int(rng.integers(2))
        ot1, st = f.receiver_round(beta)
        ot2 = p.send(i, j, ot1)
        val = f.reconstruct(ot2, st)
        b = p.reveal(i, j)
        if b == beta:
            return beta, attempt, True, CellPublic(SsotTranscript(ot1, ot2), b), val
        if attempt < retry_cap:
            p.restore(cp)
    return beta, retry_cap, False, CellPublic(SsotTranscript(ot1, ot2), b), None


def extract(
    prover: ProverSpec, x: bytes, w: Bits, lam: int, seed: Any = 0, retry_cap: int = 40,
) -> tuple[ExtractionRecord, PokProver]:
    """Rewinding extractor.  Uses the same prover coins as ``pok_run`` with the
    same seed, so the two can be compared trial by trial."""
    if retry_cap < 1:
        raise ValueError("retry_cap must be >= 1")
    f = IdealSsot(rng_for(child(seed, 0)))
    p = prover.build(x, w, lam, f, child(seed, 1))
    if not getattr(p, "restartable", False):
        raise NotRestartableError(f"{prover.name} cannot be rewound")
    erng = rng_for(child(seed, 4))
    n = w.length
    betas = [[0] * lam for _ in range(n)]
    attempts = [[0] * lam for _ in range(n)]
    matched = [[False] * lam for _ in range(n)]
    rec: list[list[int | None]] = [[None] * lam for _ in range(n)]
    cells = []
    forced = 0
    for i in range(n):
        for j in range(lam):
            beta, a, m, cell, val = _search_cell(p, f, i, j, erng, retry_cap)
            betas[i][j], attempts[i][j], matched[i][j], rec[i][j] = beta, a, m, val
            forced += not m
            cells.append(cell)
    token = p.zk()
    ok = IDEAL.verify(RelationId.RZkPok, _verifier_instance(x, lam, cells, HASH_PREIMAGE, f), token)
    wit = None
    if ok and forced == 0:
        bits = []
        for row in rec:
            acc = 0
            for v in row:
                acc ^= v
            bits.append(acc)
        cand = Bits.from_iter(bits)
        if HASH_PREIMAGE.holds(x, cand):
            wit = cand
    return ExtractionRecord(betas, attempts, matched, rec, wit, ok, forced, len(cells)), p


# ------------------------------------------------------------ harnesses

EXTRACTION_CSV_FIELDS = (
    "prover", "trial", "accepted", "extracted", "exact_witness", "attempts", "max_attempts",
    "forced_continues", "transcript_cells",
)


def extraction_row(name: str, trial: int, accepted: bool, rec: ExtractionRecord, w: Bits) -> dict[str, Any]:
    flat = [a for row in rec.attempts for a in row]
    return {
        "prover": name, "trial": trial, "accepted": int(accepted), "extracted": int(rec.success),
        "exact_witness": int(rec.success and rec.witness == w), "attempts": sum(flat),
        "max_attempts": max(flat, default=0), "forced_continues": rec.forced_continues,
        "transcript_cells": rec.transcript_cells,
    }


@dataclass(frozen=True)
class ExtractabilityReport:
    prover: str
    trials: int
    accepted: int
    extracted: int
    exact_witness: int  # successful extractions equal to the prover's witness
    attempts: tuple[int, ...]
    max_transcript_cells: int
    single_pass_cells: int

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.trials

    @property
    def extraction_rate(self) -> float:
        return self.extracted / self.trials

    @property
    def gap(self) -> float:
        return abs(self.extraction_rate - self.acceptance_rate)

    def geometric(self, alpha: float = 0.01) -> GeometricFit:
        return geometric_fit(self.attempts, 0.5, alpha)


def extractability(
    prover: ProverSpec, trials: int, seed: Any = 0, n_bits: int = 4, lam: int = 4,
    retry_cap: int = 40, keep_attempts: int = 20000, paired: bool = True,
    rows: list[dict[str, Any]] | None = None,
) -> ExtractabilityReport:
    """Per trial: one honest-verifier run and one extraction.  ``paired``
    shares instance and prover coins between the two; otherwise the
    extraction draws its own instance and coins."""
    acc = ext = exact = 0
    att: list[int] = []
    max_cells = 0
    for t in range(trials):
        s = child(seed, t)
        x, w = _instance(n_bits, s)
        ok, _, _ = pok_run(x, w, lam, s, prover)
        if not paired:
            s = child(child(seed, 1 << 20), t)
            x, w = _instance(n_bits, s)
        rec, _ = extract(prover, x, w, lam, s, retry_cap)
        acc += ok
        if rec.success:
            ext += 1
            exact += rec.witness == w
        if len(att) < keep_attempts:
            att.extend(a for row in rec.attempts for a in row)
        max_cells = max(max_cells, rec.transcript_cells)
        if rows is not None:
            rows.append(extraction_row(prover.name, t, ok, rec, w))
    return ExtractabilityReport(prover.name, trials, acc, ext, exact, tuple(att[:keep_attempts]),
                                max_cells, n_bits * lam)


@dataclass(frozen=True)
class SimulatabilityReport:
    prover: str
    trials: int
    tv: float
    ci: float


def simulatability_check(
    prover: ProverSpec, trials: int, seed: Any = 0, n_bits: int = 4, lam: int = 4,
    retry_cap: int = 40, verifier_bit: str = "zero",
) -> SimulatabilityReport:
    """TV between the prover's final state after an honest-verifier run and
    after extraction, using independent coins for the two worlds."""
    real, ideal = [], []
    for t in range(trials):
        s0, s1 = child(child(seed, 0), t), child(child(seed, 1), t)
        x0, w0 = _instance(n_bits, s0)
        _, _, p0 = pok_run(x0, w0, lam, s0, prover, verifier_bit)
        real.append(p0.final_state())
        x1, w1 = _instance(n_bits, s1)
        _, p1 = extract(prover, x1, w1, lam, s1, retry_cap)
        ideal.append(p1.final_state())
    tv, ci = empirical_tv(real, ideal)
    return SimulatabilityReport(prover.name, trials, tv, ci)


# ----------------------------------------------------- bounded concurrency

def ot_round_count(n_bits: int, lam: int) -> int:
    """Messages in the sharing phase: receiver handle, sender handle and
    location reveal for each of the n_bits * lam cells."""
    return 3 * n_bits * lam


def concurrent_params(params: ProtocolParams, n_bits: int, lam: int) -> ProtocolParams:
    return params.with_threshold_offset(ot_round_count(n_bits, lam))


class PokResponder:
    """Prover side of one session on the engine: odd rounds carry the
    receiver handle, even rounds the sender handle plus location byte, and
    the last exchange carries the proof token."""

    def __init__(self, prover: PokProver, n_bits: int, lam: int):
        self.prover = prover
        self.n_cells = n_bits * lam
        self.lam = lam
        self.expected_round: int | None = 1

    def respond(self, rnd: int, body: bytes, rng) -> bytes:
        k = (rnd - 1) // 2
        if k < self.n_cells:
            i, j = divmod(k, self.lam)
            ot2 = self.prover.send(i, j, body)
            self.expected_round = rnd + 2
            return ot2 + bytes([self.prover.reveal(i, j)])
        self.expected_round = None
        return self.prover.zk()


class PokInitiator:
    """Verifier or extractor for one session.  In extract mode it searches
    each cell against the prover's checkpoint, restores the prover and then
    sends the kept receiver bit through the engine, so the recorded
    transcript is a single pass."""

    def __init__(self, x, lam, n_bits, ssot, prover: PokProver | None = None, retry_cap: int = 40):
        self.x, self.lam, self.n_bits, self.ssot = x, lam, n_bits, ssot
        self.prover = prover
        self.retry_cap = retry_cap
        self.k = 0
        self.cells: list[CellPublic] = []
        self.values: list[int | None] = []
        self.matched: list[bool] = []
        self.attempts: list[int] = []
        self.finished = False
        self.accepted = False
        self._pending = None

    @property
    def extracting(self) -> bool:
        return self.prover is not None

    def next_message(self, rng) -> Msg:
        n_cells = self.n_bits * self.lam
        if self.k < n_cells:
            beta, att, m = 0, 1, True
            if self.extracting:
                i, j = divmod(self.k, self.lam)
                cp = self.prover.checkpoint()
                beta, att, m, _, _ = _search_cell(self.prover, self.ssot, i, j, rng, self.retry_cap)
                self.prover.restore(cp)
            ot1, st = self.ssot.receiver_round(beta)
            self._pending = (ot1, st, att, m)
            return Msg(2 * self.k + 1, ot1)
        return Msg(2 * n_cells + 1, b"zk")

    def receive(self, payload) -> None:
        if payload is BOT or payload is NA:
            self.finished = True
            return
        body = payload.body
        if self.k < self.n_bits * self.lam:
            ot1, st, att, m = self._pending
            ot2, b = body[:-1], body[-1]
            val = self.ssot.reconstruct(ot2, st)
            self.cells.append(CellPublic(SsotTranscript(ot1, ot2), b))
            self.values.append(val if m else None)
            self.matched.append(m)
            self.attempts.append(att)
            self.k += 1
            return
        inst = _verifier_instance(self.x, self.lam, self.cells, HASH_PREIMAGE, self.ssot)
        self.accepted = IDEAL.verify(RelationId.RZkPok, inst, body)
        self.finished = True

    def witness(self) -> Bits | None:
        if not (self.extracting and self.accepted and all(self.matched)):
            return None
        bits = []
        for r in range(self.n_bits):
            acc = 0
            for v in self.values[r * self.lam:(r + 1) * self.lam]:
                acc ^= v
            bits.append(acc)
        cand = Bits.from_iter(bits)
        return cand if HASH_PREIMAGE.holds(self.x, cand) else None


@dataclass(frozen=True)
class ConcurrentReport:
    q: int
    m: int
    threshold: int
    trials: int
    accepted: tuple[int, ...]
    extracted: tuple[int, ...]
    transcript_events: int
    single_pass_events: int

    def rates(self) -> list[tuple[float, float]]:
        return [(a / self.trials, e / self.trials) for a, e in zip(self.accepted, self.extracted)]


def _scheduler(kind: str, seed, span: int):
    if kind == "interleave":
        return RandomInterleave(seed)
    if kind == "staggered":
        return BlockStaggered(span)
    raise ValueError(f"unknown scheduler {kind!r}")


def _concurrent_once(q, lam, n_bits, seed, prover, scheduler, extracting, retry_cap):
    f = IdealSsot(rng_for(child(seed, 0)))
    insts = [_instance(n_bits, child(seed, 10 + s)) for s in range(q)]
    provers = [prover.build(x, w, lam, f, child(seed, 100 + s)) for s, (x, w) in enumerate(insts)]
    inits = [
        PokInitiator(x, lam, n_bits, f, p if extracting else None, retry_cap)
        for (x, _), p in zip(insts, provers)
    ]
    n_cells = n_bits * lam
    engine = Engine([PokResponder(p, n_bits, lam) for p in provers], 2 * n_cells + 2)
    driver = Driver(inits, _scheduler(scheduler, child(seed, 5), 2 * lam), rng_for(child(seed, 6)))
    advance(engine, driver, rng_for(child(seed, 7)))
    return inits, insts, engine


def pok_concurrent_harness(
    q: int, params_prime: ProtocolParams, seed: Any = 0, trials: int = 200, n_bits: int = 4,
    lam: int = 2, prover: ProverSpec | None = None, scheduler: str = "interleave",
    retry_cap: int = 40,
) -> ConcurrentReport:
    """Q interleaved sessions on the session engine, once with honest
    verifiers and once with per-session extractors, sharing prover coins."""
    spec = prover if prover is not None else Honest()
    acc = [0] * q
    ext = [0] * q
    events = 0
    for t in range(trials):
        s = child(seed, t)
        v, _, _ = _concurrent_once(q, lam, n_bits, s, spec, scheduler, False, retry_cap)
        e, insts, eng = _concurrent_once(q, lam, n_bits, s, spec, scheduler, True, retry_cap)
        for k in range(q):
            acc[k] += v[k].accepted
            wit = e[k].witness()
            ext[k] += wit is not None and wit == insts[k][1]
        events = max(events, len(eng.events))
    return ConcurrentReport(q, ot_round_count(n_bits, lam), params_prime.threshold, trials,
                            tuple(acc), tuple(ext), events, q * (2 * n_bits * lam + 2))
