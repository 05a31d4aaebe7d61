"""Statistical receiver-private OT assembled from an ideal sender-private OT.

The sender of the outer protocol plays SSOT receiver in (lam+2)*lam
extraction cells, then both swap roles for one main execution whose
consistency with the cells is proved through the ideal backend.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Any

import numpy as np

from .backends import (
    IDEAL, CellPublic, CellSecret, RelationId, SrotInstance, SrotWitness, srot_row_targets,
)
from .bits import Bits
from .seeding import child, rng_for
from .ssot import IdealSsot, SsotTranscript, ssot_run
from .stats import tv_from_counts

__all__ = [
    "ssot_run", "SrotRun", "srot_run", "HonestReceiver", "ShareWithholder", "LocationLiar",
    "MismatchedBeta", "RECEIVERS", "receiver_privacy_tv_exact", "receiver_privacy_tv_closed_form",
    "receiver_privacy_tv", "TVEstimate", "sender_view", "sender_privacy_game", "GameResult",
]


# ------------------------------------------------------------- receivers

class HonestReceiver:
    name = "Honest"

    def __init__(self, beta: int = 0):
        if beta not in (0, 1):
            raise ValueError("beta must be 0 or 1")
        self.beta = beta

    @property
    def extraction_beta(self) -> int:
        return self.beta

    @property
    def main_beta(self) -> int:
        return self.beta

    def begin(self, lam: int, rng: np.random.Generator) -> None:
        pass

    def cell_inputs(self, i: int, j: int, share: int, alpha: int, loc: int) -> tuple[int, int]:
        return (alpha, share) if loc else (share, alpha)

    def reveal(self, i: int, j: int, loc: int) -> int:
        return loc


class ShareWithholder(HonestReceiver):
    """Puts the mask in both positions, so no share is ever transferred."""

    name = "ShareWithholder"

    def cell_inputs(self, i, j, share, alpha, loc):
        return (alpha, alpha)


class LocationLiar(HonestReceiver):
    """With probability ``p`` per run, misreports the location of one cell."""

    name = "LocationLiar"

    def __init__(self, beta: int = 0, p: float = 0.5):
        super().__init__(beta)
        self.p = p
        self._target: tuple[int, int] | None = None

    def begin(self, lam, rng):
        self._target = None
        if rng.random() < self.p:
            self._target = (int(rng.integers(lam + 2)), int(rng.integers(lam)))

    def reveal(self, i, j, loc):
        return loc ^ 1 if (i, j) == self._target else loc


class MismatchedBeta(HonestReceiver):
    """Shares beta=0 in the extraction grid but uses beta=1 in the main execution."""

    name = "MismatchedBeta"

    def __init__(self, beta: int = 1):
        super().__init__(beta)

    @property
    def extraction_beta(self):
        return 0

    @property
    def main_beta(self):
        return 1


RECEIVERS = {c.name: c for c in (HonestReceiver, ShareWithholder, LocationLiar, MismatchedBeta)}


# ------------------------------------------------------------------ runs

@dataclass
class SrotRun:
    lam: int
    locations: list[list[int]]  # revealed by the receiver
    sender_bits: list[list[int]]  # the outer sender's SSOT choice bits
    recovered: list[list[int]]  # what the outer sender reconstructed per cell
    shares: list[list[int]]
    alphas: list[list[int]]
    cell_transcripts: list[list[SsotTranscript]]
    main: SsotTranscript
    r: int
    r_prime: int
    r_tilde: int
    token: bytes
    accepted: bool
    pair: tuple[int, int] | None = None
    output: int | None = None
    ssot: IdealSsot | None = field(default=None, repr=False)

    @property
    def aborted(self) -> bool:
        return not self.accepted

    def to_record(self) -> dict[str, Any]:
        def grid(g):
            return ["".join(str(v) for v in row) for row in g]

        return {
            "lambda": self.lam,
            "locations": grid(self.locations),
            "sender_bits": grid(self.sender_bits),
            "recovered": grid(self.recovered),
            "shares": grid(self.shares),
            "alphas": grid(self.alphas),
            "cell_transcripts": [[t.to_hex() for t in row] for row in self.cell_transcripts],
            "main": self.main.to_hex(),
            "r": self.r,
            "r_prime": self.r_prime,
            "r_tilde": self.r_tilde,
            "token": self.token.hex(),
            "accepted": self.accepted,
            "pair": None if self.pair is None else list(self.pair),
            "output": self.output,
        }


def _shares_for(target: int, lam: int, rng: np.random.Generator) -> list[int]:
    sh = [int(v) for v in rng.integers(0, 2, lam - 1)]
    last = target
    for v in sh:
        last ^= v
    return sh + [last]


def _interact(lam: int, receiver, rng: np.random.Generator, sender_choice: str,
              ssot: IdealSsot | None) -> SrotRun:
    if lam < 2:
        raise ValueError("lambda must be >= 2")
    if sender_choice not in ("random", "zero"):
        raise ValueError("sender_choice must be 'random' or 'zero'")
    f = ssot if ssot is not None else IdealSsot(rng)
    receiver.begin(lam, rng)
    r_prime = int(rng.integers(2))
    r_star = Bits.random(lam, rng)
    targets = srot_row_targets(r_prime, receiver.extraction_beta, r_star)

    locs, bs, rec, shs, als, trs = [], [], [], [], [], []
    pub_rows, sec_rows = [], []
    for i, t in enumerate(targets):
        row_sh = _shares_for(t, lam, rng)
        row = ([], [], [], [], [])
        pub, sec = [], []
        for j in range(lam):
            loc = int(rng.integers(2))
            alpha = int(rng.integers(2))
            b = int(rng.integers(2)) if sender_choice == "random" else 0
            ot1, st = f.receiver_round(b)
            m0, m1 = receiver.cell_inputs(i, j, row_sh[j], alpha, loc)
            srand = Bits.random(lam, rng)
            ot2 = f.sender_round(ot1, m0, m1, srand)
            got = f.reconstruct(ot2, st)
            shown = receiver.reveal(i, j, loc)
            tr = SsotTranscript(ot1, ot2)
            for lst, v in zip(row, (shown, b, got, alpha, tr)):
                lst.append(v)
            pub.append(CellPublic(tr, shown))
            sec.append(CellSecret(srand, row_sh[j], alpha))
        locs.append(row[0]); bs.append(row[1]); rec.append(row[2])
        als.append(row[3]); trs.append(row[4]); shs.append(row_sh)
        pub_rows.append(tuple(pub)); sec_rows.append(tuple(sec))

    r = int(rng.integers(2))
    ot1, st = f.receiver_round(r)
    mb = receiver.main_beta
    ot2 = f.sender_round(ot1, r_prime, r_prime ^ mb, r_star)
    r_tilde = f.reconstruct(ot2, st)
    main = SsotTranscript(ot1, ot2)

    inst = SrotInstance(lam, main, tuple(pub_rows), f)
    wit = SrotWitness(r_prime, receiver.extraction_beta, r_star, tuple(sec_rows))
    token = IDEAL.prove(RelationId.RSrotConsistency, inst, wit)
    ok = IDEAL.verify(RelationId.RSrotConsistency, inst, token)
    return SrotRun(lam, locs, bs, rec, shs, als, trs, main, r, r_prime, r_tilde,
                   token.to_bytes(), ok, ssot=f)


def _final_pair(run: SrotRun, m0: int, m1: int) -> tuple[int, int]:
    return (run.r_tilde ^ (m0 & 1), run.r_tilde ^ run.r ^ (m1 & 1))


def srot_run(
    m0: int, m1: int, beta: int, lam: int, rng: np.random.Generator, *,
    receiver=None, sender_choice: str = "random", ssot: IdealSsot | None = None,
) -> tuple[int | None, SrotRun]:
    """Full execution.  Returns ``(m', run)``; ``m'`` is None when the sender aborts.

    ``sender_choice`` sets the outer sender's SSOT choice bit per cell:
    fresh uniform bits ("random") or the constant 0 ("zero").
    """
    recv = receiver if receiver is not None else HonestReceiver(beta)
    run = _interact(lam, recv, rng, sender_choice, ssot)
    if not run.accepted:
        return None, run
    run.pair = _final_pair(run, m0, m1)
    run.output = run.pair[recv.main_beta] ^ run.r_prime
    return run.output, run


# ---------------------------------------------------- receiver privacy

_STAR = 2


def sender_view(run: SrotRun) -> tuple[int, int, int, int]:
    """Reduced sender view ``(v1, v2, r, r_tilde)``.

    ``v_i`` is row i's secret when every cell of that row was recovered as a
    share (sender bit equal to the location), else ``2``.  Given this tuple
    the rest of the sender's view has the same distribution for both values
    of beta: partial rows expose fewer than lam uniform shares, masks are
    uniform, rows past the second hold the main-execution randomness, which
    is independent of beta, and SSOT handles are opaque.
    """
    v = []
    for i in (0, 1):
        if all(b == loc for b, loc in zip(run.sender_bits[i], run.locations[i])):
            acc = 0
            for x in run.recovered[i]:
                acc ^= x
            v.append(acc)
        else:
            v.append(_STAR)
    return v[0], v[1], run.r, run.r_tilde


def _view_code(v1, v2, r, rt):
    return ((v1 * 3 + v2) * 2 + r) * 2 + rt


N_CODES = 36


def receiver_privacy_tv_closed_form(lam: int) -> Fraction:
    """Probability that the reduced view exposes beta."""
    h = Fraction(1, 2**lam)
    return h + h / 2 - h * h / 2


def receiver_privacy_tv_exact(lam: int = 2, sender_choice: str = "random") -> Fraction:
    """Exact TV between the sender's views for beta=0 and beta=1 by enumerating
    every coin of the first two extraction rows plus r' and r.  Each cell view
    is (revealed location, sender bit, recovered value).  Feasible for lam <= 3."""
    if lam < 2 or lam > 3:
        raise ValueError("exhaustive enumeration supports lambda in {2, 3}")
    counts = [Counter(), Counter()]
    ncell = lam
    bvals = (0, 1) if sender_choice == "random" else (0,)
    for beta in (0, 1):
        c = counts[beta]
        for r_prime, r in product((0, 1), repeat=2):
            r_tilde = r_prime ^ (r & beta)
            row_views = []
            for target in (r_prime, beta):
                views = Counter()
                for free in product((0, 1), repeat=ncell - 1):
                    last = target
                    for v in free:
                        last ^= v
                    shares = free + (last,)
                    for cells in product(product((0, 1), bvals, (0, 1)), repeat=ncell):
                        view = tuple(
                            (loc, b, sh if b == loc else a)
                            for (loc, b, a), sh in zip(cells, shares)
                        )
                        views[view] += 1
                row_views.append(views)
            for v1, n1 in row_views[0].items():
                for v2, n2 in row_views[1].items():
                    c[(v1, v2, r, r_tilde)] += n1 * n2
    total = sum(counts[0].values())
    keys = set(counts[0]) | set(counts[1])
    diff = sum(abs(counts[0][k] - counts[1][k]) for k in keys)
    return Fraction(diff, 2 * total)


@dataclass(frozen=True)
class TVEstimate:
    lam: int
    trials: int
    tv: float
    ci: float
    exact: Fraction

    @property
    def bound(self) -> float:
        return (self.lam + 2) / 2**self.lam


def _sample_codes(lam: int, beta: int, n: int, rng: np.random.Generator, sender_choice: str) -> np.ndarray:
    loc = rng.integers(0, 2, (n, 2, lam))
    b = rng.integers(0, 2, (n, 2, lam)) if sender_choice == "random" else np.zeros((n, 2, lam), dtype=np.int64)
    full = (loc == b).all(axis=2)
    r_prime = rng.integers(0, 2, n)
    r = rng.integers(0, 2, n)
    r_tilde = r_prime ^ (r & beta)
    v1 = np.where(full[:, 0], r_prime, _STAR)
    v2 = np.where(full[:, 1], beta, _STAR)
    return ((v1 * 3 + v2) * 2 + r) * 2 + r_tilde


def view_histograms(
    lam: int, trials: int, seed: Any = 0, *, method: str = "reduced",
    sender_choice: str = "random", betas: tuple[int, int] = (0, 1),
) -> list[np.ndarray]:
    """Counts of reduced sender views (length ``N_CODES``) for each receiver bit."""
    hists = []
    for k, beta in enumerate(betas):
        rng = rng_for(child(seed, k))
        if method == "reduced":
            codes = _sample_codes(lam, beta, trials, rng, sender_choice)
        elif method == "protocol":
            codes = np.array([
                _view_code(*sender_view(_interact(lam, HonestReceiver(beta), rng, sender_choice, None)))
                for _ in range(trials)
            ])
        else:
            raise ValueError(f"unknown method {method!r}")
        hists.append(np.bincount(codes, minlength=N_CODES).astype(np.int64))
    return hists


def receiver_privacy_tv(
    lam: int, trials: int, seed: Any = 0, *, method: str = "reduced",
    sender_choice: str = "random", betas: tuple[int, int] = (0, 1),
) -> TVEstimate:
    """Empirical TV between sender views for ``betas[0]`` and ``betas[1]``.

    ``method="reduced"`` samples the reduced view directly (vectorised);
    ``method="protocol"`` runs the full protocol and reduces each view.
    Passing ``betas=(b, b)`` gives the null check.
    """
    hists = view_histograms(lam, trials, seed, method=method, sender_choice=sender_choice, betas=betas)
    tv, ci = tv_from_counts(hists[0], hists[1])
    exact = receiver_privacy_tv_closed_form(lam) if betas[0] != betas[1] else Fraction(0)
    return TVEstimate(lam, trials, tv, ci, exact)


# ------------------------------------------------------- sender privacy

@dataclass(frozen=True)
class GameResult:
    strategy: str
    trials: int
    wins: tuple[int, int]
    completed: tuple[int, int]
    aborted: tuple[int, int]

    def p_hat(self, g: int) -> float:
        if self.completed[g] == 0:
            return math.nan
        return abs(self.wins[g] / self.completed[g] - 0.5)

    @property
    def p0(self) -> float:
        return self.p_hat(0)

    @property
    def p1(self) -> float:
        return self.p_hat(1)

    @property
    def advantage(self) -> float:
        return min(self.p0, self.p1)


def _distinguish(m_out: int, m0: int, m1: int, rng) -> int:
    if m0 == m1:
        return int(rng.integers(2))
    return 0 if m_out == m0 else 1


def sender_privacy_game(
    strategy, m0: int = 0, m1: int = 1, trials: int = 1000, seed: Any = 0, lam: int = 4,
) -> GameResult:
    """Plays G0 and G1 ``trials`` times each.

    In G_g the challenger replaces slot g by m_{b_g} for a uniform b_g.  The
    distinguisher reconstructs its own slot, maps the value back to an index
    for the guess on that slot, and guesses uniformly for the other one.
    Runs in which the sender aborts are counted separately.
    """
    wins, done, aborted = [0, 0], [0, 0], [0, 0]
    for g in (0, 1):
        for t in range(trials):
            rng = rng_for(child(child(seed, g), t))
            recv = strategy if hasattr(strategy, "cell_inputs") and not isinstance(strategy, type) else strategy()
            run = _interact(lam, recv, rng, "random", None)
            if not run.accepted:
                aborted[g] += 1
                continue
            bg = int(rng.integers(2))
            mm = [m0, m1]
            inputs = (mm[bg], m1) if g == 0 else (m0, mm[bg])
            run.pair = _final_pair(run, *inputs)
            out = run.pair[recv.main_beta] ^ run.r_prime
            guesses = [int(rng.integers(2)), int(rng.integers(2))]
            guesses[recv.main_beta] = _distinguish(out, m0, m1, rng)
            done[g] += 1
            wins[g] += guesses[g] == bg
    name = getattr(strategy, "name", str(strategy))
    return GameResult(name, trials, tuple(wins), tuple(done), tuple(aborted))
