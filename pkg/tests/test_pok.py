import numpy as np
import pytest

from bczklab.bits import Bits
from bczklab.params import desk_profile
from bczklab.pok import (
    Aborter, BetaRecorder, BitLeaker, CoinTape, Deterministic, FrozenProver, Honest,
    NotRestartableError, ProverSpec, ShareCorruptor, ShareMatrix, ZeroWitness, _instance,
    concurrent_params, extract, extractability, extraction_row, ot_round_count,
    pok_concurrent_harness, pok_run, simulatability_check, EXTRACTION_CSV_FIELDS,
)
from bczklab.seeding import child
from bczklab.stats import binomial_ci


def _inst(seed=0, n_bits=4):
    return _instance(n_bits, seed)


def test_share_matrix_rows_xor_to_witness(rng):
    w = Bits.from_iter([1, 0, 1, 1])
    m = ShareMatrix.deal(w, 3, rng)
    assert m.rows == 4
    assert [m.row_xor(i) for i in range(4)] == [1, 0, 1, 1]
    assert m.shares_witness(w)


def test_honest_completeness():
    for s in range(20):
        x, w = _inst(s)
        ok, tr, _ = pok_run(x, w, 4, s)
        assert ok
        assert len(tr.cells) == 16
        # the verifier's bit is 0, so it learns exactly the cells with location 0
        assert len(tr.outputs) == 16


def test_share_corruptor_rejected():
    for s in range(20):
        x, w = _inst(s)
        ok, _, _ = pok_run(x, w, 4, s, ShareCorruptor(1))
        assert not ok


def test_zero_witness_rejected_for_nonzero_witness():
    hits = 0
    for s in range(40):
        x, w = _inst(s)
        if w.count() == 0:
            continue
        hits += 1
        ok, _, _ = pok_run(x, w, 4, s, ZeroWitness())
        rec, _ = extract(ZeroWitness(), x, w, 4, s)
        assert not ok and rec.witness is None
    assert hits > 30


def test_extraction_recovers_exact_witness():
    for s in range(200):
        x, w = _inst(s)
        rec, _ = extract(Honest(), x, w, 4, s)
        assert rec.accepted and rec.witness == w
        assert rec.forced_continues == 0
        assert rec.transcript_cells == 16
        assert all(all(r) for r in rec.matched)


def test_extraction_is_deterministic_per_seed():
    x, w = _inst(3)
    a, _ = extract(Honest(), x, w, 4, 3)
    b, _ = extract(Honest(), x, w, 4, 3)
    assert a.to_record() == b.to_record()


def test_extract_rejects_bad_cap_and_frozen_prover():
    x, w = _inst(1)
    with pytest.raises(ValueError):
        extract(Honest(), x, w, 4, 1, retry_cap=0)
    with pytest.raises(NotRestartableError):
        extract(ProverSpec("Frozen", FrozenProver), x, w, 4, 1)


def test_bit_leaker_forces_every_cell():
    x, w = _inst(2)
    rec, _ = extract(BitLeaker(), x, w, 2, 2, retry_cap=5)
    assert rec.forced_continues == 8
    assert rec.witness is None
    assert all(a == 5 for row in rec.attempts for a in row)


def test_extractability_suite_at_1000():
    for spec in (Honest(), Aborter(0.3), ShareCorruptor(1)):
        rep = extractability(spec, 1000, seed=11)
        assert rep.gap <= 0.02
        assert rep.exact_witness == rep.extracted
        assert rep.max_transcript_cells == rep.single_pass_cells == 16
    honest = extractability(Honest(), 1000, seed=11)
    assert honest.extracted == 1000
    assert honest.geometric().pvalue > 0.01


def test_aborter_acceptance_rate_near_seventy_percent():
    rep = extractability(Aborter(0.3), 1000, seed=12)
    assert abs(rep.acceptance_rate - 0.7) < 3 * binomial_ci(0.7, 1000)


def test_unpaired_aborter_gap_is_sampling_noise():
    rep = extractability(Aborter(0.3), 1000, seed=13, paired=False)
    assert rep.gap <= 4 * binomial_ci(0.7, 1000)


def test_extraction_rows_match_fields():
    rows = []
    extractability(Honest(), 5, seed=1, rows=rows)
    assert len(rows) == 5
    assert all(tuple(r) == EXTRACTION_CSV_FIELDS for r in rows)
    assert all(r["extracted"] == 1 and r["attempts"] >= 16 for r in rows)
    x, w = _inst(0)
    rec, _ = extract(Honest(), x, w, 4, 0)
    assert extraction_row("Honest", 0, True, rec, w)["max_attempts"] == max(max(r) for r in rec.attempts)


def test_simulatability_deterministic_prover_zero_tv():
    rep = simulatability_check(Deterministic(), 100, seed=1)
    assert rep.tv == 0


def test_simulatability_coin_tape_within_noise():
    rep = simulatability_check(CoinTape(), 1500, seed=2)
    assert rep.tv <= 3 * rep.ci + 0.02


def test_beta_recorder_distinguishes_zero_bit_but_not_uniform_bits():
    zero = simulatability_check(BetaRecorder(), 300, seed=3, verifier_bit="zero")
    unif = simulatability_check(BetaRecorder(), 1500, seed=3, verifier_bit="uniform")
    assert zero.tv > 0.9
    assert unif.tv <= 3 * unif.ci + 0.03


def test_ot_round_count_and_threshold_offset():
    assert ot_round_count(4, 2) == 24
    p = desk_profile(64, 32, 10, 1)
    q = concurrent_params(p, 4, 2)
    assert q.threshold == p.threshold - 24


@pytest.mark.parametrize("scheduler", ["interleave", "staggered"])
def test_concurrent_harness_two_sessions(scheduler):
    p = concurrent_params(desk_profile(64, 32, 10, 2), 2, 2)
    rep = pok_concurrent_harness(2, p, seed=5, trials=30, n_bits=2, lam=2, scheduler=scheduler)
    assert rep.accepted == (30, 30)
    assert rep.extracted == (30, 30)
    assert rep.transcript_events == rep.single_pass_events


def test_concurrent_harness_unknown_scheduler():
    p = desk_profile(64, 32, 10, 1)
    with pytest.raises(ValueError):
        pok_concurrent_harness(1, p, trials=1, n_bits=1, lam=2, scheduler="chaos")
