"""Adaptive attack that finds NP witnesses when states can be duplicated.

Weak measurements {M0, M1} on the flag shrink the weight of the non-witness
branch each iteration.  Duplication is free for a statevector, so each inner
attempt measures a fresh copy of the current state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from ..bits import Bits
from .circuits import Circuit, evaluate_classical
from .statevector import H, StateVector, apply_measure, weak_flag_measurement

ZERO_TOL = 1e-15


def closed_form_delta(eps, i: int):
    """``(delta_i, prod_{j<=i} alpha_j)``; exact when ``eps`` is rational."""
    if i < 0:
        raise ValueError("i must be >= 0")
    if not 0 <= eps <= 1:
        raise ValueError("eps must lie in [0, 1]")
    two = 2 ** i
    if isinstance(eps, (Fraction, int)):
        e = Fraction(eps)
        prod = (1 + (two - 1) * e) / two
        return (1 - e) / (1 + (two - 1) * e), prod
    prod = (1 + (two - 1) * eps) / two
    return (1 - eps) / (1 + (two - 1) * eps), prod


def abort_probability(delta_prev, x_len: int):
    """Probability that all ``x_len`` inner measurements give outcome 1."""
    return (delta_prev / 2) ** x_len


def attack_success_probability(eps, n: int, x_len: int):
    """Exact probability that no iteration aborts and the final sample is a witness."""
    p = Fraction(1) if isinstance(eps, (Fraction, int)) else 1.0
    for i in range(1, n + 1):
        d_prev, _ = closed_form_delta(eps, i - 1)
        p *= 1 - abort_probability(d_prev, x_len)
    d_n, _ = closed_form_delta(eps, n)
    return p * (1 - d_n)


@dataclass(frozen=True)
class IterationRecord:
    i: int
    alpha: float  # P[outcome 0] on the state entering the iteration
    delta: float  # weight of the flag-0 branch after the iteration
    abort_probability: float
    attempts: int
    aborted: bool


@dataclass
class AttackTrace:
    n: int
    x_len: int
    eps: float
    initial_delta: float
    iterations: list[IterationRecord] = field(default_factory=list)
    outcome: int | None = None
    status: str = "bot"  # witness | not_witness | bot | unsatisfiable

    @property
    def success(self) -> bool:
        return self.status == "witness"

    def to_record(self) -> dict[str, Any]:
        return {
            "n": self.n, "x_len": self.x_len, "eps": self.eps, "status": self.status,
            "outcome": self.outcome,
            "iterations": [
                {"i": r.i, "alpha": r.alpha, "delta": r.delta, "abort_probability": r.abort_probability,
                 "attempts": r.attempts, "aborted": r.aborted}
                for r in self.iterations
            ],
        }


def _x_len(x) -> int:
    if isinstance(x, Bits):
        return x.length
    if isinstance(x, (bytes, bytearray)):
        return 8 * len(x)
    if isinstance(x, str):
        return 8 * len(x.encode())
    if isinstance(x, int):
        return x
    raise TypeError("x must be bytes, str, Bits or a bit length")


def initial_state(circuit: Circuit, n: int) -> StateVector:
    """Uniform superposition on the witness register pushed through ``circuit``."""
    s = StateVector.zero(circuit.n_qubits)
    for q in range(n):
        s = s.apply_matrix(H, (q,))
    return circuit.apply(s)


def cloning_attack(circuit: Circuit, x, n_witness_bits: int, rng: np.random.Generator) -> AttackTrace:
    n = n_witness_bits
    if not 1 <= n <= 12:
        raise ValueError("witness length must lie in [1, 12]")
    if circuit.n_qubits < n + 1:
        raise ValueError("circuit needs the witness register plus a flag")
    x_len = _x_len(x)
    flag = circuit.n_qubits - 1
    op = weak_flag_measurement(flag)
    psi = initial_state(circuit, n)
    eps = psi.probability(flag, 1)
    tr = AttackTrace(n, x_len, eps, 1 - eps)
    for i in range(1, n + 1):
        alpha, beta = op.probabilities(psi)
        attempts, kept = 0, None
        for _ in range(x_len):
            attempts += 1
            out, post = apply_measure(psi.copy(), op, rng)
            if out == 0:
                kept = post
                break
        if kept is None:
            tr.iterations.append(IterationRecord(i, alpha, psi.probability(flag, 0), beta ** x_len, attempts, True))
            tr.status = "bot"
            return tr
        psi = kept
        tr.iterations.append(IterationRecord(i, alpha, psi.probability(flag, 0), beta ** x_len, attempts, False))
    probs = psi.marginal(range(n))
    y = int(rng.choice(probs.size, p=probs / probs.sum()))
    tr.outcome = y
    if eps <= ZERO_TOL:
        tr.status = "unsatisfiable"
    else:
        flag_out = (evaluate_classical(circuit, y) >> flag) & 1
        tr.status = "witness" if flag_out else "not_witness"
    return tr


@dataclass(frozen=True)
class AttackSummary:
    n: int
    witnesses: int
    x_len: int
    trials: int
    successes: int
    aborts: int
    exact_success: Fraction

    @property
    def rate(self) -> float:
        return self.successes / self.trials


def attack_frequency(n: int, witnesses, x, trials: int, seed: Any = 0) -> AttackSummary:
    from .circuits import witness_oracle

    ws = sorted(set(witnesses))
    c = witness_oracle(n, ws)
    rng = np.random.default_rng(seed)
    succ = aborts = 0
    for _ in range(trials):
        t = cloning_attack(c, x, n, rng)
        succ += t.success
        aborts += t.status == "bot"
    eps = Fraction(len(ws), 2 ** n)
    return AttackSummary(n, len(ws), _x_len(x), trials, succ, aborts,
                         attack_success_probability(eps, n, _x_len(x)))


@dataclass(frozen=True)
class RecurrenceCheck:
    cases: int
    max_deviation: float


def recurrence_deviation(n_max: int = 6, seed: Any = 0, x_len: int = 64) -> RecurrenceCheck:
    """Largest gap between the simulated delta_i and its closed form over every
    witness count at n = 1..n_max.  ``x_len`` is large enough that aborts
    essentially never cut a run short; truncated runs are still compared on
    the iterations they reached."""
    from .circuits import witness_oracle

    rng = np.random.default_rng(seed)
    worst, cases = 0.0, 0
    for n in range(1, n_max + 1):
        for k in range(2 ** n + 1):
            ws = sorted(int(v) for v in rng.choice(2 ** n, size=k, replace=False))
            tr = cloning_attack(witness_oracle(n, ws), x_len, n, rng)
            eps = k / 2 ** n
            for r in tr.iterations:
                if not r.aborted:
                    worst = max(worst, abs(r.delta - closed_form_delta(eps, r.i)[0]))
            cases += 1
    return RecurrenceCheck(cases, worst)
