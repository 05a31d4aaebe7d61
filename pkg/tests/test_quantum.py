import math
from fractions import Fraction

import numpy as np
import pytest

from bczklab.quantum import (
    Circuit, CircuitFormatError, Gate, MeasurementOp, QuantumError, StateVector, apply_measure,
    attack_frequency, attack_success_probability, cloning_attack, closed_form_delta,
    evaluate_classical, random_circuit, random_suite, recurrence_deviation, watrous_amplify,
    watrous_bound, weak_flag_measurement, witness_oracle,
)
from bczklab.quantum.cloning import abort_probability
from bczklab.quantum.watrous import AmplifierDomainError, half_flag_circuit, rounds_for


# ------------------------------------------------------------ statevector

def test_little_endian_basis_index():
    s = Circuit(3, (Gate("x", (0,)),)).apply(StateVector.zero(3))
    assert abs(s.amps[1]) == 1
    s = Circuit(3, (Gate("x", (2,)),)).apply(StateVector.zero(3))
    assert abs(s.amps[4]) == 1


def test_random_circuits_preserve_norm(rng):
    for _ in range(30):
        c = random_circuit(5, 25, rng)
        s = c.apply(StateVector.random(5, rng))
        assert abs(s.norm() - 1) < 1e-9


def test_inverse_circuit_undoes(rng):
    c = random_circuit(4, 30, rng)
    psi = StateVector.random(4, rng)
    assert abs(c.inverse().apply(c.apply(psi)).fidelity(psi) - 1) < 1e-9


def test_weak_measurement_on_basis_states(rng):
    op = weak_flag_measurement(0)
    p0, p1 = op.probabilities(StateVector.basis(1, 0))
    assert abs(p0 - 0.5) < 1e-12 and abs(p1 - 0.5) < 1e-12
    p0, p1 = op.probabilities(StateVector.basis(1, 1))
    assert abs(p0 - 1) < 1e-12 and p1 < 1e-12


def test_measurement_completeness_on_random_states(rng):
    op = weak_flag_measurement(2)
    for _ in range(100):
        p0, p1 = op.probabilities(StateVector.random(3, rng))
        assert abs(p0 + p1 - 1) < 1e-9


def test_post_measurement_state_is_normalized(rng):
    op = weak_flag_measurement(1)
    for _ in range(50):
        _, post = apply_measure(StateVector.random(2, rng), op, rng)
        assert abs(post.norm() - 1) < 1e-9


def test_incomplete_measurement_rejected():
    with pytest.raises(QuantumError):
        MeasurementOp(np.eye(2, dtype=complex), np.eye(2, dtype=complex), (0,))
    with pytest.raises(QuantumError):
        MeasurementOp(np.eye(4, dtype=complex), np.zeros((4, 4), dtype=complex), (0,))


# --------------------------------------------------------- circuit format

def test_circuit_text_roundtrip(rng):
    c = random_circuit(5, 40, rng)
    text = c.to_text()
    assert text.startswith("qubits 5\n")
    assert Circuit.from_text(text) == c


def test_circuit_text_comments_and_case():
    c = Circuit.from_text("# bell\nqubits 2\nH 0   # hadamard\ncx 0 1\n\nry 1 0.5\n")
    assert [g.name for g in c.gates] == ["h", "cx", "ry"]
    assert c.gates[2].angle == 0.5


@pytest.mark.parametrize("text", [
    "h 0\n",  # missing width
    "qubits 2\nqubits 2\n",
    "qubits 2\nfoo 0\n",
    "qubits 2\ncx 0\n",
    "qubits 2\nry 0\n",
    "qubits 2\nh 0 0.3\n",
    "qubits 2\nh 5\n",
    "qubits 2\ncx 1 1\n",
    "qubits 2\nh x\n",
    "qubits 0\n",
    "qubits 2\nmcx 1\n",
])
def test_circuit_text_errors(text):
    with pytest.raises(CircuitFormatError):
        Circuit.from_text(text)


def test_witness_oracle_is_classical():
    c = witness_oracle(3, [2, 5])
    for y in range(8):
        out = evaluate_classical(c, y)
        assert (out >> 3) & 1 == (y in (2, 5))
        assert out & 7 == y


# ---------------------------------------------------------------- watrous

def test_watrous_rejects_bad_parameters():
    c = half_flag_circuit(1, 1)
    for p0, eps in [(0, 0.1), (1, 0.1), (0.49, 0), (0.49, 0.5)]:
        with pytest.raises(AmplifierDomainError):
            watrous_amplify(c, 1, p0, eps)
    with pytest.raises(AmplifierDomainError):
        watrous_amplify(c, 2, 0.49, 0.1)


def test_rounds_and_bound_formula():
    eps = 2.0 ** -20
    assert rounds_for(0.49, eps) == math.ceil(20 * math.log(2) / (0.49 * 0.51))
    assert abs(watrous_bound(0.49, eps) - (1 - 16 * eps * (20 * math.log(2)) ** 2 / (0.49 * 0.51) ** 2)) < 1e-15


def test_half_success_rotation_reaches_high_fidelity(rng):
    amp = watrous_amplify(half_flag_circuit(1, 1), 1, 0.49, 2.0 ** -20)
    res = amp.run(StateVector.random(1, rng))
    assert abs(res.p_success - 0.5) < 1e-12
    assert res.fidelity >= 1 - 1e-3
    assert res.fidelity >= watrous_bound(0.49, 2.0 ** -20)


def test_certain_success_is_identity_on_success_branch(rng):
    amp = watrous_amplify(Circuit(2), 1, 0.49, 0.01)
    res = amp.run(StateVector.random(1, rng))
    assert res.fidelity == pytest.approx(1, abs=1e-12)
    assert res.round_success == (pytest.approx(1, abs=1e-12),)


def test_round_success_independent_of_input(rng):
    v = random_circuit(3, 15, rng, [0, 1])
    amp = watrous_amplify(half_flag_circuit(2, 1, v), 2, 0.49, 2.0 ** -10)
    a = amp.run(StateVector.random(2, rng))
    b = amp.run(StateVector.random(2, rng))
    # the loop stops once the remaining failure mass is numerically zero
    assert max(abs(x - y) for x, y in zip(a.round_success, b.round_success)) < 1e-9
    assert abs(a.failure - b.failure) < 1e-9


def test_random_suite_meets_bound():
    eps = 2.0 ** -20
    bound = watrous_bound(0.49, eps)
    for case in random_suite(6, seed=1, eps=eps):
        assert case.circuit.n_qubits <= 10
        res = watrous_amplify(case.circuit, case.n_input, 0.49, eps).run(case.psi)
        assert abs(res.p_success - 0.5) <= case.eta / 2 + 1e-12
        assert res.fidelity >= bound


# ---------------------------------------------------------------- cloning

def test_closed_form_examples():
    d, prod = closed_form_delta(Fraction(1, 8), 3)
    assert (d, prod) == (Fraction(7, 15), Fraction(15, 64))
    eps = Fraction(3, 10)
    assert closed_form_delta(eps, 0) == (1 - eps, 1)
    with pytest.raises(ValueError):
        closed_form_delta(Fraction(1, 2), -1)
    with pytest.raises(ValueError):
        closed_form_delta(Fraction(3, 2), 1)


def test_closed_form_matches_direct_recurrence():
    # alpha_i = (1 - delta/2); delta' = (delta/2) / alpha_i
    for eps in (Fraction(1, 8), Fraction(1, 3), Fraction(5, 7)):
        delta, prod = 1 - eps, Fraction(1)
        for i in range(1, 10):
            alpha = 1 - delta / 2
            prod *= alpha
            delta = (delta / 2) / alpha
            assert closed_form_delta(eps, i) == (delta, prod)


def test_delta_decreases_and_meets_two_thirds():
    for n in range(1, 13):
        eps = Fraction(1, 2 ** n)
        ds = [closed_form_delta(eps, i)[0] for i in range(n + 1)]
        assert all(a > b for a, b in zip(ds, ds[1:]))
        assert ds[-1] <= (1 - eps) / (2 - eps) <= Fraction(2, 3)


def test_simulated_delta_three_of_eight(rng):
    tr = cloning_attack(witness_oracle(3, [6]), 64, 3, rng)
    assert not any(r.aborted for r in tr.iterations)
    assert abs(tr.iterations[-1].delta - 7 / 15) < 1e-9
    for r in tr.iterations:
        d_prev = closed_form_delta(1 / 8, r.i - 1)[0]
        assert abs(r.alpha - (1 - d_prev / 2)) < 1e-9


def test_recurrence_all_witness_counts():
    chk = recurrence_deviation(n_max=4, seed=3)
    assert chk.cases == sum(2 ** n + 1 for n in range(1, 5))
    assert chk.max_deviation < 1e-9


def test_abort_probability_monte_carlo():
    rng = np.random.default_rng(9)
    c = witness_oracle(3, [1])
    trials = 4000
    first = sum(cloning_attack(c, 2, 3, rng).iterations[0].aborted for _ in range(trials))
    p = abort_probability(7 / 8, 2)
    assert abs(first / trials - p) < 4 * math.sqrt(p * (1 - p) / trials)
    assert p <= 2.0 ** -2


def test_all_witnesses_always_succeed(rng):
    c = witness_oracle(2, range(4))
    for _ in range(20):
        tr = cloning_attack(c, 4, 2, rng)
        assert tr.initial_delta < 1e-12 and tr.success


def test_unsatisfiable_instance(rng):
    tr = cloning_attack(witness_oracle(3, []), 8, 3, rng)
    assert tr.status in ("unsatisfiable", "bot")
    tr = cloning_attack(witness_oracle(2, []), 64, 2, rng)
    assert tr.status == "unsatisfiable"
    assert tr.iterations[-1].delta == pytest.approx(1)


def test_success_frequency_one_witness():
    s = attack_frequency(3, [5], 8, 3000, seed=4)
    assert s.rate >= 1 / 3
    assert abs(s.rate - float(s.exact_success)) < 4 * math.sqrt(0.25 / 3000)


def test_exact_success_probability_is_rational():
    p = attack_success_probability(Fraction(1, 8), 3, 8)
    assert isinstance(p, Fraction) and Fraction(1, 3) <= p < 1


def test_attack_input_validation(rng):
    with pytest.raises(ValueError):
        cloning_attack(witness_oracle(2, [1]), 8, 13, rng)
    with pytest.raises(ValueError):
        cloning_attack(Circuit(2), 8, 2, rng)
    with pytest.raises(TypeError):
        cloning_attack(witness_oracle(2, [1]), 1.5, 2, rng)
