import itertools
from fractions import Fraction

import numpy as np
import pytest

from bczklab.ot import (
    HonestReceiver, LocationLiar, MismatchedBeta, ShareWithholder, receiver_privacy_tv,
    receiver_privacy_tv_closed_form, receiver_privacy_tv_exact, sender_privacy_game, sender_view,
    srot_run, view_histograms, N_CODES,
)
from bczklab.ssot import IdealSsot, SsotError, ssot_run
from bczklab.stats import binomial_ci

from oracles import ot_receiver_tv


@pytest.mark.parametrize("beta,m0,m1", list(itertools.product((0, 1), repeat=3)))
def test_ssot_returns_chosen_message(beta, m0, m1, rng):
    out, _ = ssot_run(beta, m0, m1, rng)
    assert out == (m1 if beta else m0)


def test_ssot_rejects_bad_bit_and_foreign_handle(rng):
    f = IdealSsot(rng)
    with pytest.raises(SsotError):
        f.receiver_round(2)
    with pytest.raises(SsotError):
        f.sender_round(b"\x00" * 16, 0, 1, None)


@pytest.mark.parametrize("lam", [2, 4, 8])
def test_srot_exhaustive_correctness(lam):
    rng = np.random.default_rng(lam)
    for m0, m1, beta in itertools.product((0, 1), repeat=3):
        for _ in range(4):
            out, run = srot_run(m0, m1, beta, lam, rng)
            assert run.accepted
            assert out == (m1 if beta else m0)


def test_srot_named_cases(rng):
    assert srot_run(1, 0, 0, 4, rng)[0] == 1
    assert srot_run(0, 1, 1, 4, rng)[0] == 1
    assert srot_run(1, 0, 1, 4, rng)[0] == 0


def test_srot_zero_sender_choice_is_still_correct(rng):
    for m0, m1, beta in itertools.product((0, 1), repeat=3):
        assert srot_run(m0, m1, beta, 3, rng, sender_choice="zero")[0] == (m1 if beta else m0)


def test_srot_rejects_small_lambda_and_bad_choice(rng):
    with pytest.raises(ValueError):
        srot_run(0, 1, 0, 1, rng)
    with pytest.raises(ValueError):
        srot_run(0, 1, 0, 2, rng, sender_choice="one")


def test_mismatched_beta_is_rejected(rng):
    for _ in range(20):
        out, run = srot_run(0, 1, 1, 4, rng, receiver=MismatchedBeta())
        assert out is None and run.aborted


def test_share_withholder_is_rejected(rng):
    for _ in range(10):
        out, _ = srot_run(0, 1, 0, 3, rng, receiver=ShareWithholder(0))
        assert out is None


def test_location_liar_aborts_exactly_when_lie_is_visible():
    # swapping the location is invisible when the share equals the mask
    rng = np.random.default_rng(7)
    lies = aborts = 0
    for _ in range(200):
        recv = LocationLiar(0, p=0.5)
        _, run = srot_run(0, 1, 0, 3, rng, receiver=recv)
        visible = False
        if recv._target is not None:
            lies += 1
            i, j = recv._target
            visible = run.shares[i][j] != run.alphas[i][j]
        aborts += run.aborted
        assert run.aborted == visible
    assert 60 < lies < 140 and 0 < aborts < lies


def test_run_record_shapes(rng):
    _, run = srot_run(0, 1, 0, 3, rng)
    rec = run.to_record()
    assert len(rec["locations"]) == 5 and all(len(row) == 3 for row in rec["locations"])
    assert rec["output"] == 0 and rec["accepted"] is True


@pytest.mark.parametrize("lam", [2, 3])
def test_exact_tv_matches_independent_enumeration(lam):
    assert receiver_privacy_tv_exact(lam) == ot_receiver_tv(lam)


@pytest.mark.parametrize("lam", [2, 3])
def test_exact_tv_matches_closed_form(lam):
    assert receiver_privacy_tv_exact(lam) == receiver_privacy_tv_closed_form(lam)


def test_closed_form_values():
    assert receiver_privacy_tv_closed_form(2) == Fraction(11, 32)
    assert receiver_privacy_tv_closed_form(3) == Fraction(23, 128)


def test_exact_tv_sender_choice_zero_matches_random():
    assert receiver_privacy_tv_exact(2, "zero") == receiver_privacy_tv_exact(2, "random")


def test_reduced_and_protocol_sampling_agree():
    a = view_histograms(2, 3000, seed=5, method="protocol")
    b = view_histograms(2, 3000, seed=6, method="reduced")
    for ha, hb in zip(a, b):
        assert ha.shape == (N_CODES,)
        pa, pb = ha / ha.sum(), hb / hb.sum()
        assert 0.5 * np.abs(pa - pb).sum() < 0.06


def test_sender_view_exposes_beta_when_rows_complete(rng):
    for _ in range(200):
        _, run = srot_run(0, 1, 1, 2, rng)
        v1, v2, r, rt = sender_view(run)
        if v2 != 2:
            assert v2 == 1
        if v1 != 2:
            assert v1 == run.r_prime
        assert rt == run.r_prime ^ (r & 1)


def test_sampled_tv_at_lambda_8_under_bound():
    est = receiver_privacy_tv(8, 20000, seed=3)
    assert est.tv <= 0.06
    assert est.tv <= float(est.exact) + 3 * est.ci + 0.01


def test_sampled_tv_tracks_exact_at_lambda_2():
    est = receiver_privacy_tv(2, 20000, seed=4)
    assert abs(est.tv - 11 / 32) < 3 * est.ci + 0.01


def test_null_check_same_beta():
    est = receiver_privacy_tv(4, 20000, seed=8, betas=(1, 1))
    assert est.exact == 0
    assert est.tv < 0.03


def test_sender_privacy_honest_receivers():
    for beta in (0, 1):
        g = sender_privacy_game(HonestReceiver(beta), trials=1500, seed=beta)
        # the receiver learns its own slot fully and nothing about the other
        own, other = (g.p0, g.p1) if beta == 0 else (g.p1, g.p0)
        assert own == 0.5
        assert other < 3 * binomial_ci(0.5, 1500)
        assert g.advantage < 0.06
        assert g.aborted == (0, 0)


def test_sender_privacy_location_liar_counts_aborts():
    g = sender_privacy_game(LocationLiar(0, 0.5), trials=600, seed=2)
    assert sum(g.aborted) > 0
    assert sum(g.completed) + sum(g.aborted) == 1200
    assert g.advantage < 0.1
