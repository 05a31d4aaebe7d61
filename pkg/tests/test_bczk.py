import numpy as np
import pytest
from scipy.stats import chisquare

from bczklab.backends import HASH_PREIMAGE, IDEAL
from bczklab.bczk import (
    Aborter, FixedBits, HonestLike, HonestProver, Phase, SlotStaggerer, adversary_library,
    blocks_without_slots, matched_count, run_protocol, slot_records,
)
from bczklab.engine import BundledMessage, Engine, Msg, NA
from bczklab.params import desk_profile


def test_honest_run_accepts():
    p = desk_profile(8, 4, 2, 1)
    _, _, driver = run_protocol(p, HonestLike(), 1)
    assert driver.initiators[0].accepted is True


def test_honest_runs_accept_under_every_library_adversary_that_completes():
    p = desk_profile(8, 8, 2, 2)
    for adv in adversary_library():
        _, _, driver = run_protocol(p, adv, 3)
        for v in driver.initiators:
            assert v.accepted in (True, False)
            if adv.name in ("HonestLike", "SlotStaggerer", "StateDependentScheduling"):
                assert v.accepted


def test_committed_bits_uniform():
    p = desk_profile(1000, 8, 2, 1)
    ones = n = 0
    for s in range(10):
        _, provers, _ = run_protocol(p, HonestLike(), s)
        bits = [sec.bit for sec in provers[0].secrets_handle()]
        ones += sum(bits)
        n += len(bits)
    assert n == 10_000 and 0.48 <= ones / n <= 0.52


def test_stage2_message_during_stage1_aborts(rng):
    p = desk_profile(8, 4, 2, 1)
    pr = HonestProver(p, b"\0" * 32, None, 8)
    assert pr.respond(3 * p.slots + 1, b"", rng) is None
    assert pr.phase is Phase.ABORTED


def test_garbage_stage2_token_rejected():
    p = desk_profile(8, 4, 2, 1)

    class Garbler(HonestProver):
        def respond(self, rnd, body, rng):
            out = super().respond(rnd, body, rng)
            return b"\x00" * len(out) if self.phase is Phase.DONE else out

    _, _, driver = run_protocol(p, HonestLike(), 2, prover_factory=None)
    assert driver.initiators[0].accepted
    x, w = HASH_PREIMAGE.sample(16, np.random.default_rng(0))
    _, _, driver = run_protocol(p, HonestLike(), 2, prover_factory=lambda: Garbler(p, x, w, 8), x=x, w=w)
    assert driver.initiators[0].accepted is False


def test_verifier_bits_uniform_chi_square():
    p = desk_profile(1000, 8, 2, 1)
    counts = np.zeros(2)
    for s in range(10):
        _, provers, _ = run_protocol(p, HonestLike(), 100 + s)
        vb = provers[0].verifier_bits()
        counts += np.bincount(vb, minlength=2)
    assert counts.sum() == 10_000
    assert chisquare(counts).pvalue > 0.001


def test_matched_count_concentration():
    p = desk_profile(1000, 8, 2, 1)
    tr, provers, _ = run_protocol(p, HonestLike(), 4)
    c = matched_count(tr, 0, provers[0].secrets_handle())
    assert 0.46 <= c / 1000 <= 0.54


def test_fixed_zero_verifier_matches_zero_commitments():
    p = desk_profile(64, 8, 2, 1)
    tr, provers, _ = run_protocol(p, FixedBits(0), 4)
    secrets = provers[0].secrets_handle()
    assert matched_count(tr, 0, secrets) == sum(s.bit == 0 for s in secrets)


def test_matched_count_zero_slots():
    p = desk_profile(8, 4, 2, 1)
    tr, _, _ = run_protocol(p, HonestLike(), 4)
    assert matched_count(tr, 0, []) == 0


def test_slot_records_positions_are_ordered():
    p = desk_profile(16, 8, 2, 2)
    tr, provers, _ = run_protocol(p, HonestLike(), 6)
    for i, pr in enumerate(provers):
        for r in slot_records(tr, i, pr.secrets_handle()):
            rpos, cpos, bpos = r.positions
            assert rpos < cpos < bpos


def test_slot_staggerer_leaves_slotless_blocks():
    p = desk_profile(8, 8, 2, 2)
    stag = [blocks_without_slots(run_protocol(p, SlotStaggerer(), s)[0], p) for s in range(5)]
    honest = [blocks_without_slots(run_protocol(p, HonestLike(), s)[0], p) for s in range(5)]
    assert max(stag) >= 1 and sum(stag) > sum(honest)


def test_aborter_zero_matches_honest_like():
    p = desk_profile(16, 8, 2, 2)
    a, _, _ = run_protocol(p, Aborter(0.0), 11)
    b, _, _ = run_protocol(p, HonestLike(), 11)
    assert a.events == b.events
