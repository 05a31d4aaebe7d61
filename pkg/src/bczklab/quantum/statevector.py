"""Dense statevectors with little-endian qubit order (qubit 0 is the least
significant bit of the basis index)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_QUBITS = 20
TOL = 1e-9

SQ2 = 1 / math.sqrt(2)
I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) * SQ2
S = np.array([[1, 0], [0, 1j]], dtype=complex)
T = np.array([[1, 0], [0, np.exp(1j * math.pi / 4)]], dtype=complex)


def rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


class QuantumError(ValueError):
    pass


class StateVector:
    __slots__ = ("amps", "n_qubits")

    def __init__(self, amps, copy: bool = True):
        a = np.array(amps, dtype=complex, copy=copy).reshape(-1)
        m = a.size.bit_length() - 1
        if a.size < 1 or (1 << m) != a.size:
            raise QuantumError("amplitude count must be a power of two")
        if m > MAX_QUBITS:
            raise QuantumError(f"at most {MAX_QUBITS} qubits are supported")
        self.amps = a
        self.n_qubits = m

    @classmethod
    def zero(cls, n: int) -> "StateVector":
        return cls.basis(n, 0)

    @classmethod
    def basis(cls, n: int, index: int) -> "StateVector":
        if n > MAX_QUBITS:
            raise QuantumError(f"at most {MAX_QUBITS} qubits are supported")
        a = np.zeros(1 << n, dtype=complex)
        a[index] = 1
        return cls(a, copy=False)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "StateVector":
        a = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        return cls(a / np.linalg.norm(a), copy=False)

    def copy(self) -> "StateVector":
        return StateVector(self.amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0:
            raise QuantumError("cannot normalise the zero vector")
        return StateVector(self.amps / nrm, copy=False)

    def inner(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amps, other.amps))

    def fidelity(self, other: "StateVector") -> float:
        return abs(self.inner(other)) ** 2

    def tensor(self, high: "StateVector") -> "StateVector":
        """``high`` occupies the new most significant qubits."""
        return StateVector(np.kron(high.amps, self.amps), copy=False)

    # -- linear maps on chosen qubits
    def _axis(self, q: int) -> int:
        if not 0 <= q < self.n_qubits:
            raise QuantumError(f"qubit {q} out of range for {self.n_qubits} qubits")
        return self.n_qubits - 1 - q

    def apply_matrix(self, mat: np.ndarray, qubits: Sequence[int], controls: Sequence[int] = ()) -> "StateVector":
        """Apply ``mat`` (2^k x 2^k; qubits[0] is its least significant index bit)
        on ``qubits``, conditioned on every control being 1.  Returns a new state."""
        qubits, controls = list(qubits), list(controls)
        if len(set(qubits + controls)) != len(qubits) + len(controls):
            raise QuantumError("gate qubits must be distinct")
        k = len(qubits)
        if mat.shape != (1 << k, 1 << k):
            raise QuantumError("matrix shape does not match qubit count")
        m = self.n_qubits
        psi = self.amps.copy().reshape([2] * m)
        idx: list = [slice(None)] * m
        for c in controls:
            idx[self._axis(c)] = 1
        remaining = [a for a in range(m) if idx[a] == slice(None)]
        sub = psi[tuple(idx)]
        # axes of the target qubits inside ``sub``, most significant first
        tax = [remaining.index(self._axis(q)) for q in reversed(qubits)]
        moved = np.moveaxis(sub, tax, list(range(k)))
        shape = moved.shape
        flat = moved.reshape(1 << k, -1)
        out = (mat @ flat).reshape(shape)
        psi[tuple(idx)] = np.moveaxis(out, list(range(k)), tax)
        return StateVector(psi.reshape(-1), copy=False)

    def swap(self, a: int, b: int) -> "StateVector":
        psi = self.amps.reshape([2] * self.n_qubits)
        return StateVector(np.swapaxes(psi, self._axis(a), self._axis(b)).reshape(-1))

    def probability(self, qubit: int, value: int) -> float:
        psi = self.amps.reshape([2] * self.n_qubits)
        sl = np.take(psi, value, axis=self._axis(qubit))
        return float(np.sum(np.abs(sl) ** 2))

    def project(self, qubit: int, value: int) -> "StateVector":
        """Unnormalised projection onto ``qubit == value``."""
        psi = self.amps.copy().reshape([2] * self.n_qubits)
        idx: list = [slice(None)] * self.n_qubits
        idx[self._axis(qubit)] = 1 - value
        psi[tuple(idx)] = 0
        return StateVector(psi.reshape(-1), copy=False)

    def marginal(self, qubits: Sequence[int]) -> np.ndarray:
        """Distribution over ``qubits`` (qubits[0] least significant)."""
        p = np.abs(self.amps.reshape([2] * self.n_qubits)) ** 2
        keep = [self._axis(q) for q in reversed(list(qubits))]
        drop = tuple(a for a in range(self.n_qubits) if a not in keep)
        p = p.sum(axis=drop) if drop else p
        order = sorted(keep)
        p = np.moveaxis(p, [order.index(a) for a in keep], list(range(len(keep))))
        return p.reshape(-1)

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits})"


@dataclass(frozen=True)
class MeasurementOp:
    """Two-outcome measurement {M0, M1} on ``qubits``."""

    m0: np.ndarray
    m1: np.ndarray
    qubits: tuple[int, ...]

    def __post_init__(self):
        k = len(self.qubits)
        for m in (self.m0, self.m1):
            if m.shape != (1 << k, 1 << k):
                raise QuantumError("operator shape does not match qubit count")
        total = self.m0.conj().T @ self.m0 + self.m1.conj().T @ self.m1
        if not np.allclose(total, np.eye(1 << k), atol=TOL, rtol=0):
            raise QuantumError("measurement operators are not complete")

    def branch(self, state: StateVector, outcome: int) -> StateVector:
        return state.apply_matrix(self.m1 if outcome else self.m0, self.qubits)

    def probabilities(self, state: StateVector) -> tuple[float, float]:
        return (self.branch(state, 0).norm() ** 2, self.branch(state, 1).norm() ** 2)


def weak_flag_measurement(flag: int) -> MeasurementOp:
    """M0 = |0><0|/sqrt2 + |1><1|, M1 = |0><0|/sqrt2 on the flag qubit."""
    m0 = np.array([[SQ2, 0], [0, 1]], dtype=complex)
    m1 = np.array([[SQ2, 0], [0, 0]], dtype=complex)
    return MeasurementOp(m0, m1, (flag,))


def apply_measure(state: StateVector, op: MeasurementOp, rng: np.random.Generator) -> tuple[int, StateVector]:
    """Sample an outcome with probability ||M_b psi||^2 and renormalise."""
    b0 = op.branch(state, 0)
    p0 = b0.norm() ** 2
    outcome = 0 if rng.random() < p0 else 1
    post = b0 if outcome == 0 else op.branch(state, 1)
    return outcome, post.normalized()
