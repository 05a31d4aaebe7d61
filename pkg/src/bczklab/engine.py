"""Q-session message fabric.

A driver (the concurrent verifier) emits bundles with exactly one live
entry; the engine routes it to the matching responder state machine and
returns the responder's reply in a bundle of the same arity.  A step is
split into :meth:`Engine.accept` and :meth:`Engine.reply` so that a block
boundary may fall between a verifier message and the prover's answer.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, NamedTuple, Protocol, Sequence

import numpy as np


class ProtocolError(RuntimeError):
    pass


class StallError(ProtocolError):
    pass


class _Bot:
    __slots__ = ()

    def __repr__(self):
        return "(⊥,⊥)"

    def __reduce__(self):
        return "BOT"

    def __deepcopy__(self, memo):
        return self


BOT = _Bot()
NA = None


class Msg(NamedTuple):
    round: int
    body: bytes


class BundledMessage:
    """Exactly Q payloads; entry k belongs to session k+1."""

    __slots__ = ("entries",)

    def __init__(self, entries: Sequence[Any]):
        self.entries = tuple(entries)

    @classmethod
    def single(cls, q: int, session: int, payload: Any) -> "BundledMessage":
        e = [NA] * q
        e[session] = payload
        return cls(e)

    @classmethod
    def empty(cls, q: int) -> "BundledMessage":
        return cls([NA] * q)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def items(self):
        """(session_id, payload) pairs with 1-based session ids."""
        return [(i + 1, p) for i, p in enumerate(self.entries)]

    def __eq__(self, other):
        return isinstance(other, BundledMessage) and self.entries == other.entries

    def __repr__(self):
        return f"BundledMessage({list(self.entries)!r})"


class Event(NamedTuple):
    step: int
    session: int  # 0-based
    round: int | None  # None for a (⊥,⊥) reply
    direction: str  # "V" (to prover) or "P" (to verifier)
    body: bytes | None


class Responder(Protocol):
    expected_round: int | None

    def respond(self, rnd: int, body: bytes, rng: np.random.Generator) -> bytes | None: ...


@dataclass(frozen=True)
class TranscriptSet:
    q: int
    events: tuple[Event, ...]
    seed: int | None = None
    deviations: tuple[str, ...] = ()

    def __len__(self):
        return len(self.events)

    def order(self) -> list[tuple[int, int | None, str]]:
        return [(e.session, e.round, e.direction) for e in self.events]

    def per_session(self) -> list[list[Event]]:
        out: list[list[Event]] = [[] for _ in range(self.q)]
        for e in self.events:
            out[e.session].append(e)
        return out

    def to_lines(self) -> str:
        rows = []
        for e in self.events:
            rows.append(json.dumps({
                "step": e.step,
                "session": e.session + 1,
                "round": e.round,
                "direction": e.direction,
                "payload": None if e.body is None else e.body.hex(),
            }, separators=(",", ":")))
        return "\n".join(rows) + ("\n" if rows else "")

    @classmethod
    def from_lines(cls, text: str, q: int, seed: int | None = None) -> "TranscriptSet":
        evs = []
        for line in text.splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            body = None if d["payload"] is None else bytes.fromhex(d["payload"])
            evs.append(Event(d["step"], d["session"] - 1, d["round"], d["direction"], body))
        return cls(q, tuple(evs), seed)


class Engine:
    def __init__(self, responders: Sequence[Responder], prot_len: int):
        self.machines = list(responders)
        self.q = len(self.machines)
        self.prot_len = prot_len
        self.dead = [False] * self.q
        self.events: list[Event] = []
        self.deviations: list[str] = []
        self.steps = 0
        self._pending: tuple[int, Msg] | None = None
        self._pending_out: tuple[int, Any] | None = None

    @property
    def awaiting_reply(self) -> bool:
        return self._pending is not None or self._pending_out is not None

    @property
    def step_budget(self) -> int:
        return 2 * self.prot_len * self.q

    def accept(self, bundle: BundledMessage) -> None:
        if len(bundle) != self.q:
            raise ProtocolError(f"bundle arity {len(bundle)} != {self.q}")
        if self.awaiting_reply:
            raise ProtocolError("previous message not answered yet")
        step = self.steps
        self.steps += 1
        live = [(i, p) for i, p in enumerate(bundle.entries) if p is not NA]
        if not live:
            return
        if len(live) > 1:
            self.deviations.append(
                f"step {step}: {len(live)} live entries, kept session {live[0][0] + 1}"
            )
        i, p = live[0]
        if self.dead[i]:
            self.deviations.append(f"step {step}: message to dead session {i + 1} dropped")
            return
        m = self.machines[i]
        if isinstance(p, Msg) and p.round == m.expected_round:
            self.events.append(Event(step, i, p.round, "V", p.body))
            self._pending = (i, p)
        else:
            rnd = p.round if isinstance(p, Msg) else None
            body = p.body if isinstance(p, Msg) else None
            self.events.append(Event(step, i, rnd, "V", body))
            self._pending_out = (i, BOT)

    def reply(self, rng: np.random.Generator) -> BundledMessage:
        out = [NA] * self.q
        step = self.steps - 1
        if self._pending_out is not None:
            i, _ = self._pending_out
            self._pending_out = None
            self.dead[i] = True
            self.events.append(Event(step, i, None, "P", None))
            out[i] = BOT
        elif self._pending is not None:
            i, msg = self._pending
            self._pending = None
            body = self.machines[i].respond(msg.round, msg.body, rng)
            if body is not None:
                self.events.append(Event(step, i, msg.round + 1, "P", body))
                out[i] = Msg(msg.round + 1, body)
        return BundledMessage(out)

    def step(self, bundle: BundledMessage, rng: np.random.Generator | None = None) -> BundledMessage:
        self.accept(bundle)
        return self.reply(rng if rng is not None else np.random.default_rng())

    def transcript(self, seed: int | None = None) -> TranscriptSet:
        return TranscriptSet(self.q, tuple(self.events), seed, tuple(self.deviations))


# ---------------------------------------------------------------- drivers

class Initiator(Protocol):
    finished: bool

    def next_message(self, rng: np.random.Generator) -> Msg: ...

    def receive(self, payload: Any) -> None: ...


class Scheduler:
    """Picks which ready session speaks next; may tamper with the message."""

    def choose(self, candidates: list[int], position: int, driver: "Driver") -> int:
        raise NotImplementedError

    def tamper(self, session: int, msg: Msg) -> Msg:
        return msg


class RoundRobin(Scheduler):
    def __init__(self):
        self._last = -1

    def choose(self, candidates, position, driver):
        for c in candidates:
            if c > self._last:
                self._last = c
                return c
        self._last = candidates[0]
        return self._last


class RandomInterleave(Scheduler):
    def __init__(self, seed: Any):
        self.rng = np.random.default_rng(seed)

    def choose(self, candidates, position, driver):
        if len(candidates) == 1:
            return candidates[0]
        return candidates[int(self.rng.integers(len(candidates)))]


class BlockStaggered(Scheduler):
    """Runs one session for ``span`` consecutive verifier turns, then moves on."""

    def __init__(self, span: int):
        if span < 1:
            raise ValueError("span must be >= 1")
        self.span = span
        self._current = None
        self._left = 0

    def choose(self, candidates, position, driver):
        if self._current in candidates and self._left > 0:
            self._left -= 1
            return self._current
        later = [c for c in candidates if self._current is None or c > self._current]
        self._current = later[0] if later else candidates[0]
        self._left = self.span - 1
        return self._current


class Abortive(Scheduler):
    """Wraps another scheduler; each verifier turn aborts with probability p
    by announcing a round the responder does not expect."""

    def __init__(self, p_abort: float, seed: Any, inner: Scheduler | None = None):
        if not 0.0 <= p_abort <= 1.0:
            raise ValueError("p_abort must lie in [0, 1]")
        self.p = p_abort
        self.rng = np.random.default_rng(seed)
        self.inner = inner if inner is not None else RoundRobin()

    def choose(self, candidates, position, driver):
        return self.inner.choose(candidates, position, driver)

    def tamper(self, session, msg):
        if self.rng.random() < self.p:
            return Msg(msg.round + 1, msg.body)
        return msg


class Driver:
    """A concurrent verifier: per-session initiators plus a scheduler."""

    def __init__(self, initiators: Sequence[Initiator], scheduler: Scheduler, rng: np.random.Generator):
        self.initiators = list(initiators)
        self.scheduler = scheduler
        self.rng = rng
        self.dead = [False] * len(self.initiators)
        self.position = 0

    @property
    def q(self) -> int:
        return len(self.initiators)

    def candidates(self) -> list[int]:
        return [i for i, v in enumerate(self.initiators) if not v.finished and not self.dead[i]]

    def next_live(self, position: int) -> tuple[int, Any] | None:
        self.position = position
        cands = self.candidates()
        if not cands:
            return None
        i = self.scheduler.choose(cands, position, self)
        msg = self.initiators[i].next_message(self.rng)
        return i, self.scheduler.tamper(i, msg)

    def deliver(self, session: int, payload: Any) -> None:
        if payload is BOT:
            self.dead[session] = True
        self.initiators[session].receive(payload)

    @property
    def finished(self) -> bool:
        return not self.candidates()


def advance(
    engine: Engine, driver: Driver, rng: np.random.Generator,
    stop_at: int | None = None, budget: int | None = None,
) -> bool:
    """Drive until ``len(engine.events) >= stop_at`` or the driver is done.

    Returns True once the driver has nothing more to send.
    """
    budget = engine.step_budget if budget is None else budget
    while stop_at is None or len(engine.events) < stop_at:
        if engine.awaiting_reply:
            i = engine._pending[0] if engine._pending is not None else engine._pending_out[0]
            out = engine.reply(rng)
            driver.deliver(i, out.entries[i])
            continue
        nxt = driver.next_live(len(engine.events))
        if nxt is None:
            return True
        if engine.steps >= budget:
            raise StallError(f"step budget {budget} exhausted")
        i, payload = nxt
        engine.accept(BundledMessage.single(engine.q, i, payload))
    return False


def run(engine: Engine, driver: Driver, rng: np.random.Generator, seed: int | None = None) -> TranscriptSet:
    advance(engine, driver, rng)
    return engine.transcript(seed)


def block_view(events: Sequence[Any], params) -> list[list[Any]]:
    """Contiguous partition into ``params.blocks`` pieces of ``params.block_len``
    messages; the last piece absorbs the remainder."""
    return partition(events, params.blocks, params.block_len)


def partition(events: Sequence[Any], blocks: int, block_len: int) -> list[list[Any]]:
    out = []
    for b in range(blocks):
        lo = b * block_len
        hi = lo + block_len if b < blocks - 1 else max(len(events), lo)
        out.append(list(events[lo:hi]))
    return out


def block_bounds(b: int, blocks: int, block_len: int) -> tuple[int, int | None]:
    lo = b * block_len
    return lo, (lo + block_len if b < blocks - 1 else None)
