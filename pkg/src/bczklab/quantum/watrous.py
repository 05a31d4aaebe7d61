"""Measure-and-reflect amplification of a flagged circuit.

``Q`` acts on n input qubits (0..n-1) and k ancillas (n..n+k-1) starting in
|0>; the flag is the highest qubit and the value 0 marks success.  Each round
measures the flag; on failure it applies Q^dagger, reflects about |0^k> on
the ancillas and applies Q again.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, Gate, random_circuit
from .statevector import StateVector


class AmplifierDomainError(ValueError):
    pass


def rounds_for(p0: float, eps: float) -> int:
    return math.ceil(math.log(1 / eps) / (p0 * (1 - p0)))


def watrous_bound(p0: float, eps: float) -> float:
    """Fidelity lower bound with natural logarithms."""
    return 1 - 16 * eps * math.log(1 / eps) ** 2 / (p0 ** 2 * (1 - p0) ** 2)


@dataclass(frozen=True)
class AmplifierResult:
    p_success: float  # p(psi) of a single application of Q
    fidelity: float
    round_success: tuple[float, ...]  # P[success at round r | reached r]
    failure: float  # probability all rounds failed


@dataclass(frozen=True)
class Amplifier:
    q: Circuit
    n_input: int
    p0: float
    eps: float
    rounds: int

    @property
    def flag(self) -> int:
        return self.q.n_qubits - 1

    @property
    def k(self) -> int:
        return self.q.n_qubits - self.n_input

    def _reflect(self, s: StateVector) -> StateVector:
        mask = ((1 << self.k) - 1) << self.n_input
        idx = np.arange(s.amps.size)
        sign = np.where((idx & mask) == 0, 1.0, -1.0)
        return StateVector(s.amps * sign, copy=False)

    def run(self, psi: StateVector) -> AmplifierResult:
        """Exact branch tracking: the output mixture is summed over the round
        at which the flag first reads 0."""
        if psi.n_qubits != self.n_input:
            raise AmplifierDomainError("input width does not match")
        qinv = self.q.inverse()
        s = self.q.apply(psi.tensor(StateVector.zero(self.k)))
        good = s.project(self.flag, 0)
        p = good.norm() ** 2
        if p == 0:
            raise AmplifierDomainError("Q never succeeds on this input")
        target = good.normalized()
        fid, reach, per_round = 0.0, 1.0, []
        for _ in range(self.rounds):
            ok = s.project(self.flag, 0)
            ps = ok.norm() ** 2
            per_round.append(ps)
            if ps > 0:
                fid += reach * ps * ok.normalized().fidelity(target)
            reach *= 1 - ps
            if reach <= 0 or ps >= 1:
                reach = max(reach, 0.0)
                break
            s = s.project(self.flag, 1).normalized()
            s = self.q.apply(self._reflect(qinv.apply(s)))
        return AmplifierResult(p, fid, tuple(per_round), reach)


def watrous_amplify(q: Circuit, n_input: int, p0: float, eps: float) -> Amplifier:
    if not 0 < p0 < 1:
        raise AmplifierDomainError("p0 must lie in (0, 1)")
    if not 0 < eps < 0.5:
        raise AmplifierDomainError("eps must lie in (0, 1/2)")
    if not 1 <= n_input < q.n_qubits:
        raise AmplifierDomainError("need at least one ancilla for the flag")
    return Amplifier(q, n_input, p0, eps, rounds_for(p0, eps))


def half_flag_circuit(n_input: int, k: int, v: Circuit | None = None, eta: float = 0.0,
                      control: int = 0) -> Circuit:
    """V on the non-flag qubits, RY(pi/2) on the flag, then CRY(eta) from
    ``control`` onto the flag.  p(psi) = (1 - sin(eta) * P[control=1]) / 2 up to
    V's action, so |p(psi) - 1/2| <= eta / 2."""
    width = n_input + k
    flag = width - 1
    gates = list(v.gates) if v is not None else []
    gates.append(Gate("ry", (flag,), math.pi / 2))
    if eta:
        gates.append(Gate("cry", (control, flag), eta))
    return Circuit(width, tuple(gates))


@dataclass(frozen=True)
class SuiteCase:
    circuit: Circuit
    n_input: int
    psi: StateVector
    eta: float


def random_suite(n_circuits: int, seed, eps: float, max_width: int = 10, depth: int = 12) -> list[SuiteCase]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_circuits):
        n_input = int(rng.integers(1, 5))
        k = int(rng.integers(1, min(4, max_width - n_input) + 1))
        width = n_input + k
        body = list(range(width - 1))
        v = random_circuit(width, depth, rng, body) if len(body) >= 1 else None
        eta = float(rng.uniform(0, 2 * eps))
        control = int(rng.choice(body)) if body else 0
        c = half_flag_circuit(n_input, k, v, eta, control)
        out.append(SuiteCase(c, n_input, StateVector.random(n_input, rng), eta))
    return out
