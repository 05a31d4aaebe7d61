"""Boost a circuit that succeeds with probability about 1/2 to near certainty.

The amplifier measures the flag; on failure it undoes the circuit, reflects
the ancillas about |0...0> and reapplies it.  For p(psi) = 1/2 one reflection
sends all remaining weight to success, so the second round succeeds with
probability 1 up to rounding and the output fidelity is essentially 1, far
above the guaranteed lower bound.

    python demos/watrous_amplifier.py
"""
from bczklab.quantum import random_suite, watrous_amplify, watrous_bound

EPS = 2.0 ** -20
P0 = 0.49


def main() -> None:
    print(f"rounds t = ceil(log(1/eps)/(p0(1-p0))), bound = {watrous_bound(P0, EPS):.6f}")
    for k, case in enumerate(random_suite(8, seed=1, eps=EPS)):
        amp = watrous_amplify(case.circuit, case.n_input, P0, EPS)
        res = amp.run(case.psi)
        print(f"  circuit {k}: {case.circuit.n_qubits} qubits, {len(case.circuit.gates):2d} gates, "
              f"p={res.p_success:.6f}, rounds used {len(res.round_success)}/{amp.rounds}, "
              f"fidelity {res.fidelity:.12f}")


if __name__ == "__main__":
    main()
