"""Binomial tails in high precision and cheating-prover Monte Carlo."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Iterable

import mpmath
import numpy as np

from .backends import HASH_PREIMAGE, RwiWitness
from .bczk import HonestLike, Prover, RoundRobinHonest, default_seed_len, matched_openings
from .engine import Engine, run
from .params import ProtocolParams
from .seeding import child, spawn

DIRECT_LIMIT = 10**7
_DPS = 60


def _as_mpf(p) -> mpmath.mpf:
    if isinstance(p, Fraction):
        return mpmath.mpf(p.numerator) / p.denominator
    return mpmath.mpf(p)


def _log_term(n: int, i: int, lp, lq):
    return (mpmath.loggamma(n + 1) - mpmath.loggamma(i + 1) - mpmath.loggamma(n - i + 1)
            + i * lp + (n - i) * lq)


def binom_tail_exact(n: int, p, k: int, *, return_flag: bool = False):
    """log P[Bin(n, p) >= k] as an mpmath float (60 significant digits).

    Terms are generated by the ratio recurrence from the first term and
    summed until they fall below 1e-40 of the running sum.  When ``k`` lies
    below the mean the complement is summed instead.  For n above 10^7 a
    double-precision log-sum-exp over a window of log pmf values is used
    (relative error around 1e-12) and the result is flagged approximate;
    ``return_flag=True`` returns ``(value, approximate)``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    pf = Fraction(p) if not isinstance(p, float) else p
    if not 0 <= pf <= 1:
        raise ValueError("p must lie in [0, 1]")
    with mpmath.workdps(_DPS):
        approx = False
        if k <= 0:
            val = mpmath.mpf(0)
        elif k > n:
            val = mpmath.mpf("-inf")
        elif pf == 0:
            val = mpmath.mpf("-inf")
        elif pf == 1:
            val = mpmath.mpf(0)
        elif n > DIRECT_LIMIT:
            approx = True
            val = mpmath.mpf(_tail_float(n, float(pf), k))
        else:
            val = _tail_direct(n, _as_mpf(pf), k)
        val = +val
    return (val, approx) if return_flag else val


def _tail_float(n: int, p: float, k: int) -> float:
    """Double-precision log tail: log-sum-exp of log pmf values over a window
    that is widened until the neglected mass is below 1e-30 of the sum."""
    from scipy.special import logsumexp
    from scipy.stats import binom

    sd = math.sqrt(n * p * (1 - p))
    upper = k >= n * p
    lo_k = k if upper else k - 1
    width = max(64, int(20 * sd))
    while True:
        if upper:
            idx = np.arange(lo_k, min(n, lo_k + width) + 1)
        else:
            idx = np.arange(max(0, lo_k - width), lo_k + 1)
        lpmf = binom.logpmf(idx, n, p)
        total = logsumexp(lpmf)
        edge = lpmf[-1] if upper else lpmf[0]
        if edge - total < -70 or idx.size == n + 1 or (upper and idx[-1] == n) or (not upper and idx[0] == 0):
            break
        width *= 2
    if upper:
        return float(total)
    return float(np.log1p(-np.exp(total)))


def _sum_run(n, p, start, step, stop):
    """Sum pmf terms from ``start`` moving by ``step`` (+1 or -1) up to ``stop``."""
    lp, lq = mpmath.log(p), mpmath.log(1 - p)
    t = mpmath.exp(_log_term(n, start, lp, lq))  # mpf exponents do not underflow
    total = t
    i = start
    ratio_up = p / (1 - p)
    eps = mpmath.mpf(10) ** (-40)
    while i != stop:
        if step > 0:
            t = t * (n - i) / (i + 1) * ratio_up
        else:
            t = t * i / (n - i + 1) / ratio_up
        i += step
        total += t
        if t < total * eps and ((step > 0 and i > n * p) or (step < 0 and i < n * p)):
            break
    return total


def _tail_direct(n: int, p, k: int):
    mean = n * p
    if k >= mean:
        return mpmath.log(_sum_run(n, p, k, +1, n))
    # complement: 1 - P[X <= k-1]
    s = _sum_run(n, p, k - 1, -1, 0)
    return mpmath.log1p(-s)


def binom_tail_bigint(n: int, k: int) -> Fraction:
    """Exact P[Bin(n, 1/2) >= k] with integer arithmetic (reference path)."""
    if k <= 0:
        return Fraction(1)
    if k > n:
        return Fraction(0)
    return Fraction(sum(math.comb(n, i) for i in range(k, n + 1)), 1 << n)


@dataclass(frozen=True)
class TailResult:
    q: int
    lam: int
    n: int
    k: int
    p: Fraction
    exact_tail: Any  # log-probability, mpmath float
    chernoff: Any  # log of the bound
    satisfied: bool
    approximate: bool = False

    CSV_FIELDS = ("q", "lambda", "n", "k", "p", "log_exact_tail", "log_bound", "satisfied", "approximate")

    def row(self) -> dict[str, str]:
        return {
            "q": str(self.q), "lambda": str(self.lam), "n": str(self.n), "k": str(self.k),
            "p": str(self.p),
            "log_exact_tail": mpmath.nstr(self.exact_tail, 30),
            "log_bound": mpmath.nstr(self.chernoff, 30),
            "satisfied": str(self.satisfied).lower(),
            "approximate": str(self.approximate).lower(),
        }


def tail_rows_csv(results: Iterable[TailResult]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=TailResult.CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in results:
        w.writerow(r.row())
    return buf.getvalue()


def verify_soundness_inequality(grid: Iterable[tuple[int, int]], slack: float = 1e-12) -> list[TailResult]:
    out = []
    for q, lam in grid:
        n = 120 * q**7 * lam
        k = 60 * q**7 * lam + q**4 * lam
        val, approx = binom_tail_exact(n, Fraction(1, 2), k, return_flag=True)
        with mpmath.workdps(_DPS):
            bound = -mpmath.mpf(q * lam) / 180
            ok = bool(val <= bound + slack)
        out.append(TailResult(q, lam, n, k, Fraction(1, 2), val, bound, ok, approx))
    return out


def soundness_grid() -> list[tuple[int, int]]:
    return [(1, lam) for lam in range(1, 65)] + [(2, lam) for lam in range(1, 5)]


# -------------------------------------------------------- cheating provers

class CheatingProver(Prover):
    """Prover without a witness that tries to reach the threshold of matched
    slots.  Bits are committed before the verifier's bit arrives."""

    strategy = "UniformGuess"

    def __init__(self, params, x, seed_len, **kw):
        super().__init__(params, x, None, seed_len, **kw)

    def stage2_witness(self) -> RwiWitness:
        return RwiWitness(None, matched_openings(self))


class UniformGuess(CheatingProver):
    strategy = "UniformGuess"


class AllZeros(CheatingProver):
    strategy = "AllZeros"

    def choose_bit(self, j, rng):
        return 0


class AdaptiveOnTranscript(CheatingProver):
    """Commits to the majority of the verifier bits seen so far (ties: last bit)."""

    strategy = "AdaptiveOnTranscript"

    def choose_bit(self, j, rng):
        vb = self._vbits
        if not vb:
            return 0
        ones = sum(vb)
        if 2 * ones == len(vb):
            return vb[-1]
        return int(2 * ones > len(vb))


STRATEGIES = {c.strategy: c for c in (UniformGuess, AllZeros, AdaptiveOnTranscript)}


@dataclass(frozen=True)
class MCResult:
    strategy: str
    trials: int
    successes: int

    @property
    def rate(self) -> float:
        return self.successes / self.trials

    def std_error(self, p: float | None = None) -> float:
        p = self.rate if p is None else p
        return math.sqrt(max(p * (1 - p), 0.0) / self.trials)


def cheating_prover_mc(
    params: ProtocolParams, strategy: str | type, trials: int, seed: Any = 0,
    seed_len: int | None = None,
) -> MCResult:
    """Fraction of runs in which an honest verifier accepts a false statement."""
    cls = STRATEGIES[strategy] if isinstance(strategy, str) else strategy
    n = seed_len if seed_len is not None else default_seed_len(params)
    adv = RoundRobinHonest() if params.q > 1 else HonestLike()
    wins = 0
    for t in range(trials):
        inst_ss, adv_ss, prover_ss = spawn(child(seed, t), 3)
        x = HASH_PREIMAGE.sample_false(np.random.default_rng(inst_ss))
        provers = [cls(params, x, n) for _ in range(params.q)]
        driver = adv.build(params, x, adv_ss, n)
        run(Engine(provers, params.prot_len), driver, np.random.default_rng(prover_ss))
        wins += all(v.accepted for v in driver.initiators)
    return MCResult(cls.strategy, trials, wins)


def with_threshold(params: ProtocolParams, threshold: int) -> ProtocolParams:
    """Same profile with an explicit threshold (for median-threshold checks)."""
    return replace(params, threshold=threshold, gap=threshold - params.slots // 2)
