import numpy as np
import pytest

from bczklab.coinflip import (
    CommitmentDependent, Equivocator, FixedB, HonestP1, HonestP2, coinflip_force_output,
    coinflip_run, coinflip_string, compare_forced_to_honest, honest_frequency, p2_suite,
    simulate_against_p1,
)
from bczklab.stats import binomial_ci


def test_honest_output_is_xor(rng):
    for _ in range(50):
        s, tr = coinflip_run(rng=rng)
        assert s == tr.a ^ tr.b
        assert not tr.aborted


def test_honest_frequency_near_half():
    f = honest_frequency(20000, seed=1)
    assert abs(f - 0.5) < 3 * binomial_ci(0.5, 20000)


def test_equivocator_always_aborts(rng):
    for _ in range(30):
        s, tr = coinflip_run(Equivocator(), rng=rng)
        assert s is None and tr.aborted


@pytest.mark.parametrize("p2", [FixedB(0), FixedB(1), CommitmentDependent()])
def test_biased_p2_cannot_bias_output(p2):
    f = honest_frequency(20000, seed=2, p2=p2)
    assert abs(f - 0.5) < 3 * binomial_ci(0.5, 20000)


def test_string_stops_at_first_abort(rng):
    out, trs = coinflip_string(8, rng=rng)
    assert out.length == 8 and len(trs) == 8
    out, trs = coinflip_string(8, Equivocator(), rng=rng)
    assert out is None and len(trs) == 1


@pytest.mark.parametrize("target", [0, 1])
def test_forcing_against_every_p2(target, rng):
    for p2 in p2_suite():
        for _ in range(200):
            tr = coinflip_force_output(target, p2, rng)
            assert tr.output == target


@pytest.mark.parametrize("target", [0, 1])
def test_forcing_against_p1(target, rng):
    for _ in range(30):
        sim = simulate_against_p1(target, HonestP1(), rng, seed_len=8)
        assert sim.forced
        assert len(sim.extracted) in (1, 2)


def test_p1_simulation_detects_equivocator(rng):
    sim = simulate_against_p1(0, Equivocator(), rng, seed_len=8)
    assert sim.transcript.aborted


@pytest.mark.parametrize("target", [0, 1])
def test_forced_fields_match_honest_conditioned(target):
    cmp = compare_forced_to_honest(target, HonestP2, 3000, seed=target)
    assert cmp.passed(0.001)
    assert set(cmp.pvalues) == {"b", "a", "commitment_nibble"}


def test_transcript_record_roundtrips_fields(rng):
    _, tr = coinflip_run(rng=rng)
    rec = tr.to_record()
    assert rec["output"] == tr.output
    assert len(bytes.fromhex(rec["token"])) == 34
