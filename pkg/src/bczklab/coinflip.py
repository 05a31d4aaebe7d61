"""One-bit coin flipping: P1 commits to a, P2 answers b, P1 reveals a and
proves the opening (relation RCoinflipOpen); both output a xor b."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import stats

from .backends import IDEAL, CoinflipInstance, RelationId
from .bits import Bits
from .commitment import Commitment, brute_force_open, commit, receiver_string
from .seeding import child, rng_for


@dataclass
class CoinflipTranscript:
    rstring: Bits
    commitment: Commitment
    b: int
    a: int | None
    token: bytes
    output: int | None

    @property
    def aborted(self) -> bool:
        return self.output is None

    def to_record(self) -> dict[str, Any]:
        return {
            "rstring": self.rstring.to_hex(),
            "commitment": self.commitment.to_hex(),
            "b": self.b,
            "a": self.a,
            "token": self.token.hex(),
            "output": self.output,
        }


# ------------------------------------------------------------- parties

class HonestP1:
    name = "Honest"

    def choose_a(self, rng) -> int:
        return int(rng.integers(2))

    def reveal(self, a: int) -> int:
        return a


class Equivocator(HonestP1):
    """Reveals the complement of the committed bit."""

    name = "Equivocator"

    def reveal(self, a):
        return a ^ 1


class HonestP2:
    name = "Honest"

    def choose_b(self, com: Commitment, rng) -> int:
        return int(rng.integers(2))


class FixedB(HonestP2):
    def __init__(self, b: int):
        self.b = b & 1
        self.name = f"FixedB({self.b})"

    def choose_b(self, com, rng):
        return self.b


class CommitmentDependent(HonestP2):
    """Uses the first bit of the commitment string as b."""

    name = "CommitmentDependent"

    def choose_b(self, com, rng):
        return com.value[0]


def p2_suite() -> list[HonestP2]:
    return [HonestP2(), FixedB(0), FixedB(1), CommitmentDependent()]


# ------------------------------------------------------------------ runs

def coinflip_run(p1=None, p2=None, rng: np.random.Generator | None = None,
                 seed_len: int = 16) -> tuple[int | None, CoinflipTranscript]:
    p1 = p1 if p1 is not None else HonestP1()
    p2 = p2 if p2 is not None else HonestP2()
    rng = rng if rng is not None else np.random.default_rng()
    rs = receiver_string(seed_len, rng)
    a = p1.choose_a(rng) & 1
    seed = Bits.random(seed_len, rng)
    c = commit(rs, a, seed)
    b = p2.choose_b(c, rng) & 1
    shown = p1.reveal(a) & 1
    inst = CoinflipInstance(rs, c, shown)
    token = IDEAL.prove(RelationId.RCoinflipOpen, inst, seed).to_bytes()
    if not IDEAL.verify(RelationId.RCoinflipOpen, inst, token):
        return None, CoinflipTranscript(rs, c, b, shown, token, None)
    s = shown ^ b
    return s, CoinflipTranscript(rs, c, b, shown, token, s)


def coinflip_string(n_bits: int, p1=None, p2=None, rng=None, seed_len: int = 16
                    ) -> tuple[Bits | None, list[CoinflipTranscript]]:
    """Sequential repetition; stops at the first abort."""
    rng = rng if rng is not None else np.random.default_rng()
    out, trs = [], []
    for _ in range(n_bits):
        s, tr = coinflip_run(p1, p2, rng, seed_len)
        trs.append(tr)
        if s is None:
            return None, trs
        out.append(s)
    return Bits.from_iter(out), trs


# ----------------------------------------------------------- simulators

def coinflip_force_output(target_bit: int, p2=None, rng: np.random.Generator | None = None,
                          seed_len: int = 16) -> CoinflipTranscript:
    """Simulator against P2: commit to 0, learn b, announce a = target xor b
    and hand P2 a simulated proof."""
    p2 = p2 if p2 is not None else HonestP2()
    rng = rng if rng is not None else np.random.default_rng()
    rs = receiver_string(seed_len, rng)
    c = commit(rs, 0, Bits.random(seed_len, rng))
    b = p2.choose_b(c, rng) & 1
    a = (target_bit ^ b) & 1
    inst = CoinflipInstance(rs, c, a)
    token = IDEAL.simulate(RelationId.RCoinflipOpen, inst).to_bytes()
    ok = IDEAL.verify(RelationId.RCoinflipOpen, inst, token)
    return CoinflipTranscript(rs, c, b, a, token, (a ^ b) if ok else None)


@dataclass(frozen=True)
class P1Simulation:
    target: int
    extracted: tuple[int, ...]  # bits the commitment opens to
    transcript: CoinflipTranscript

    @property
    def forced(self) -> bool:
        return self.transcript.output == self.target


def simulate_against_p1(target_bit: int, p1=None, rng: np.random.Generator | None = None,
                        seed_len: int = 12) -> P1Simulation:
    """Unbounded simulator against P1: open the commitment by exhaustive seed
    search, then send b = target xor a.  Only feasible for small seeds."""
    p1 = p1 if p1 is not None else HonestP1()
    rng = rng if rng is not None else np.random.default_rng()
    rs = receiver_string(seed_len, rng)
    a = p1.choose_a(rng) & 1
    seed = Bits.random(seed_len, rng)
    c = commit(rs, a, seed)
    opens = brute_force_open(rs, c, seed_len)
    bits = tuple(sorted({o.bit for o in opens}))
    a_hat = bits[0] if len(bits) == 1 else int(rng.integers(2))
    b = (target_bit ^ a_hat) & 1
    shown = p1.reveal(a) & 1
    inst = CoinflipInstance(rs, c, shown)
    token = IDEAL.prove(RelationId.RCoinflipOpen, inst, seed).to_bytes()
    ok = IDEAL.verify(RelationId.RCoinflipOpen, inst, token)
    tr = CoinflipTranscript(rs, c, b, shown, token, (shown ^ b) if ok else None)
    return P1Simulation(target_bit, bits, tr)


# --------------------------------------------------------- comparisons

def _fields(tr: CoinflipTranscript) -> dict[str, int]:
    return {"b": tr.b, "a": tr.a, "commitment_nibble": tr.commitment.value.to_bytes()[0] >> 4}


@dataclass(frozen=True)
class FieldComparison:
    target: int
    trials: int
    pvalues: dict[str, float]

    def passed(self, alpha: float = 0.01) -> bool:
        return all(p >= alpha for p in self.pvalues.values())


def compare_forced_to_honest(target_bit: int, p2_factory, trials: int, seed: Any = 0,
                             seed_len: int = 16) -> FieldComparison:
    """Chi-square homogeneity per transcript field between forced transcripts
    and honest transcripts whose output happened to equal the target."""
    sim_rng, hon_rng = rng_for(child(seed, 0)), rng_for(child(seed, 1))
    sim = [_fields(coinflip_force_output(target_bit, p2_factory(), sim_rng, seed_len)) for _ in range(trials)]
    hon = []
    while len(hon) < trials:
        s, tr = coinflip_run(HonestP1(), p2_factory(), hon_rng, seed_len)
        if s == target_bit:
            hon.append(_fields(tr))
    pv = {}
    for k in sim[0]:
        cats = sorted({d[k] for d in sim} | {d[k] for d in hon})
        table = np.array([[sum(d[k] == c for d in grp) for c in cats] for grp in (sim, hon)])
        if table.shape[1] < 2:
            pv[k] = 1.0
            continue
        pv[k] = float(stats.chi2_contingency(table)[1])
    return FieldComparison(target_bit, trials, pv)


def honest_frequency(trials: int, seed: Any = 0, p2=None, seed_len: int = 16) -> float:
    rng = rng_for(seed)
    ones = 0
    for _ in range(trials):
        s, _ = coinflip_run(HonestP1(), p2, rng, seed_len)
        ones += s
    return ones / trials
