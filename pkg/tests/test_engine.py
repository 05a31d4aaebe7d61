import numpy as np
import pytest

from bczklab.bczk import HonestProver, Verifier, run_protocol, HonestLike
from bczklab.engine import (
    BOT, NA, Abortive, BundledMessage, Driver, Engine, Msg, ProtocolError, RoundRobin, TranscriptSet,
    block_view, partition, run,
)
from bczklab.params import desk_profile


class Echo:
    """Responder that answers round r with round r+1 and expects rounds 1, 3, 5."""

    def __init__(self):
        self.expected_round = 1

    def respond(self, rnd, body, rng):
        self.expected_round = rnd + 2
        return body[::-1]


def test_all_na_in_all_na_out(rng):
    e = Engine([Echo(), Echo()], 4)
    out = e.step(BundledMessage.empty(2), rng)
    assert out == BundledMessage.empty(2)
    assert e.transcript().events == ()


def test_single_live_session_gets_reply(rng):
    e = Engine([Echo(), Echo(), Echo()], 4)
    out = e.step(BundledMessage.single(3, 0, Msg(1, b"ab")), rng)
    assert out[0] == Msg(2, b"ba") and out[1] is NA and out[2] is NA


def test_out_of_order_round_kills_session(rng):
    e = Engine([Echo(), Echo()], 4)
    out = e.step(BundledMessage.single(2, 0, Msg(3, b"x")), rng)
    assert out[0] is BOT
    out = e.step(BundledMessage.single(2, 0, Msg(1, b"x")), rng)
    assert out[0] is NA
    assert any("dead" in d for d in e.transcript().deviations)


def test_arity_mismatch(rng):
    with pytest.raises(ProtocolError):
        Engine([Echo()], 4).step(BundledMessage.empty(2), rng)


def _honest_run(q, scheduler, seed):
    p = desk_profile(8, 4 * q, 2, q)
    x = b"\0" * 32
    verifiers = [Verifier(p, x, 8) for _ in range(q)]
    provers = [HonestProver(p, x, None, 8) for _ in range(q)]
    driver = Driver(verifiers, scheduler, np.random.default_rng(seed))
    tr = run(Engine(provers, p.prot_len), driver, np.random.default_rng(seed + 1))
    return tr, verifiers


def test_round_robin_alternates_and_completes():
    tr, vs = _honest_run(2, RoundRobin(), 1)
    assert all(v.finished for v in vs)
    firsts = [e.session for e in tr.events if e.direction == "V"]
    assert firsts[:6] == [0, 1, 0, 1, 0, 1]


def test_abortive_one_kills_every_session():
    tr, vs = _honest_run(3, Abortive(1.0, 0), 2)
    assert all(v.finished and v.accepted is False for v in vs)
    assert sum(e.round is None for e in tr.events) == 3


def test_same_seed_same_transcript():
    p = desk_profile(8, 8, 2, 2)
    a, _, _ = run_protocol(p, HonestLike(), 5)
    b, _, _ = run_protocol(p, HonestLike(), 5)
    assert a == b and a.to_lines() == b.to_lines()


def test_transcript_lines_round_trip():
    p = desk_profile(8, 8, 2, 2)
    tr, _, _ = run_protocol(p, HonestLike(), 9)
    back = TranscriptSet.from_lines(tr.to_lines(), tr.q)
    assert back.events == tr.events


def test_block_partition_example():
    blocks = partition(list(range(364)), 24, 15)
    assert [len(b) for b in blocks] == [15] * 23 + [19]
    assert sum(blocks, []) == list(range(364))


def test_block_partition_empty():
    assert partition([], 24, 15) == [[]] * 24


def test_block_view_uses_profile():
    p = desk_profile(64, 16, 6, 2)
    view = block_view(list(range(p.prot_len * 2)), p)
    assert len(view) == 16 and sum(len(b) for b in view) == p.prot_len * 2
