"""Gate lists with a line-oriented text form.

One gate per line: the gate name, its qubit indices (controls first, target
last) and, for rotations, a trailing angle in radians.  A ``qubits N`` line
declares the width; ``#`` starts a comment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import statevector as sv
from .statevector import StateVector

# name -> (controls, targets, takes angle)
ARITY = {
    "x": (0, 1, False), "y": (0, 1, False), "z": (0, 1, False), "h": (0, 1, False),
    "s": (0, 1, False), "sdg": (0, 1, False), "t": (0, 1, False), "tdg": (0, 1, False),
    "rx": (0, 1, True), "ry": (0, 1, True), "rz": (0, 1, True),
    "cx": (1, 1, False), "cz": (1, 1, False), "cry": (1, 1, True),
    "ccx": (2, 1, False), "swap": (0, 2, False),
    "mcx": (-1, 1, False),  # any number (>= 1) of controls
}

_INVERSE = {"s": "sdg", "sdg": "s", "t": "tdg", "tdg": "t"}
_ROT = {"rx": sv.rx, "ry": sv.ry, "cry": sv.ry, "rz": sv.rz}
_FIXED = {
    "x": sv.X, "cx": sv.X, "ccx": sv.X, "mcx": sv.X, "y": sv.Y, "z": sv.Z, "cz": sv.Z,
    "h": sv.H, "s": sv.S, "sdg": sv.S.conj().T, "t": sv.T, "tdg": sv.T.conj().T,
}


class CircuitFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.name not in ARITY:
            raise CircuitFormatError(f"unknown gate {self.name!r}")
        nc, nt, ang = ARITY[self.name]
        want = None if nc < 0 else nc + nt
        if want is not None and len(self.qubits) != want:
            raise CircuitFormatError(f"{self.name} takes {want} qubits")
        if nc < 0 and len(self.qubits) < 2:
            raise CircuitFormatError("mcx needs at least one control")
        if ang != (self.angle is not None):
            raise CircuitFormatError(f"{self.name} {'needs' if ang else 'takes no'} angle")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitFormatError(f"{self.name}: repeated qubit")

    @property
    def controls(self) -> tuple[int, ...]:
        if self.name == "swap":
            return ()
        return self.qubits[:-1]

    @property
    def target(self) -> int:
        return self.qubits[-1]

    def matrix(self) -> np.ndarray:
        if self.name in _ROT:
            return _ROT[self.name](self.angle)
        return _FIXED[self.name]

    def inverse(self) -> "Gate":
        if self.angle is not None:
            return Gate(self.name, self.qubits, -self.angle)
        return Gate(_INVERSE.get(self.name, self.name), self.qubits)

    def apply(self, state: StateVector) -> StateVector:
        if self.name == "swap":
            return state.swap(*self.qubits)
        return state.apply_matrix(self.matrix(), (self.target,), self.controls)

    def to_line(self) -> str:
        parts = [self.name] + [str(q) for q in self.qubits]
        if self.angle is not None:
            parts.append(repr(float(self.angle)))
        return " ".join(parts)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        if not 1 <= self.n_qubits <= sv.MAX_QUBITS:
            raise CircuitFormatError(f"width must lie in [1, {sv.MAX_QUBITS}]")
        for g in self.gates:
            if max(g.qubits) >= self.n_qubits or min(g.qubits) < 0:
                raise CircuitFormatError(f"{g.to_line()!r}: qubit out of range")

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise CircuitFormatError("width mismatch")
        return Circuit(self.n_qubits, self.gates + other.gates)

    def inverse(self) -> "Circuit":
        return Circuit(self.n_qubits, tuple(g.inverse() for g in reversed(self.gates)))

    def apply(self, state: StateVector) -> StateVector:
        if state.n_qubits != self.n_qubits:
            raise CircuitFormatError("state width does not match circuit width")
        for g in self.gates:
            state = g.apply(state)
        return state

    def to_text(self) -> str:
        return "\n".join([f"qubits {self.n_qubits}"] + [g.to_line() for g in self.gates]) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        width = None
        gates = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            try:
                if tok[0] == "qubits":
                    if width is not None or len(tok) != 2:
                        raise CircuitFormatError("width must be declared once as 'qubits N'")
                    width = int(tok[1])
                    continue
                if width is None:
                    raise CircuitFormatError("'qubits N' must come first")
                name = tok[0].lower()
                if name not in ARITY:
                    raise CircuitFormatError(f"unknown gate {name!r}")
                has_angle = ARITY[name][2]
                qs = tok[1:-1] if has_angle else tok[1:]
                angle = float(tok[-1]) if has_angle else None
                if has_angle and len(tok) < 3:
                    raise CircuitFormatError(f"{name} needs qubits and an angle")
                gates.append(Gate(name, tuple(int(q) for q in qs), angle))
            except (ValueError, IndexError) as exc:
                raise CircuitFormatError(f"line {lineno}: {exc}") from exc
        if width is None:
            raise CircuitFormatError("missing 'qubits N' line")
        try:
            return cls(width, tuple(gates))
        except CircuitFormatError as exc:
            raise CircuitFormatError(str(exc)) from exc


def witness_oracle(n: int, witnesses: Iterable[int], work: int = 0) -> Circuit:
    """Reversible circuit on n witness qubits (0..n-1), ``work`` idle qubits and
    a flag (the highest qubit) that XORs [y in witnesses] into the flag."""
    width = n + work + 1
    flag = width - 1
    gates: list[Gate] = []
    for w in sorted(set(witnesses)):
        if not 0 <= w < (1 << n):
            raise ValueError(f"witness {w} does not fit in {n} bits")
        flips = [q for q in range(n) if not (w >> q) & 1]
        gates += [Gate("x", (q,)) for q in flips]
        gates.append(Gate("mcx", tuple(range(n)) + (flag,)))
        gates += [Gate("x", (q,)) for q in flips]
    return Circuit(width, tuple(gates))


def evaluate_classical(c: Circuit, index: int) -> int:
    """Run ``c`` on a basis state and return the resulting basis index."""
    out = c.apply(StateVector.basis(c.n_qubits, index))
    k = int(np.argmax(np.abs(out.amps)))
    if abs(abs(out.amps[k]) - 1) > sv.TOL:
        raise ValueError("circuit is not classical on this input")
    return k


_RANDOM_GATES = ("x", "y", "z", "h", "s", "t", "rx", "ry", "rz", "cx", "cz", "cry", "swap", "ccx")


def random_circuit(width: int, depth: int, rng: np.random.Generator, qubits: Sequence[int] | None = None) -> Circuit:
    """Random gates drawn from the full gate set, restricted to ``qubits``."""
    pool = list(range(width)) if qubits is None else list(qubits)
    gates = []
    while len(gates) < depth:
        name = _RANDOM_GATES[int(rng.integers(len(_RANDOM_GATES)))]
        nc, nt, ang = ARITY[name]
        k = nc + nt
        if k > len(pool):
            continue
        qs = tuple(int(q) for q in rng.choice(pool, size=k, replace=False))
        angle = float(rng.uniform(-math.pi, math.pi)) if ang else None
        gates.append(Gate(name, qs, angle))
    return Circuit(width, tuple(gates))
