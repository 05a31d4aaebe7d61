from .circuits import Circuit, CircuitFormatError, Gate, evaluate_classical, random_circuit, witness_oracle
from .cloning import (
    AttackTrace, attack_frequency, attack_success_probability, cloning_attack, closed_form_delta,
    recurrence_deviation,
)
from .statevector import MeasurementOp, QuantumError, StateVector, apply_measure, weak_flag_measurement
from .watrous import Amplifier, random_suite, watrous_amplify, watrous_bound

__all__ = [
    "Circuit", "CircuitFormatError", "Gate", "evaluate_classical", "random_circuit", "witness_oracle",
    "AttackTrace", "attack_frequency", "attack_success_probability", "cloning_attack",
    "closed_form_delta", "recurrence_deviation", "MeasurementOp", "QuantumError", "StateVector", "apply_measure",
    "weak_flag_measurement", "Amplifier", "random_suite", "watrous_amplify", "watrous_bound",
]
