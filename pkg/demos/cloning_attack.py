"""Find an NP witness when quantum states can be copied for free.

Each iteration applies the weak measurement {M0, M1} to fresh copies of the
current state until outcome 0 appears; every success halves the weight of the
non-witness branch relative to the witness branch.  The trace below shows the
simulated delta_i next to the closed form (1-eps)/(1+(2^i-1)eps).

    python demos/cloning_attack.py
"""
from fractions import Fraction

import numpy as np

from bczklab.quantum import attack_frequency, cloning_attack, closed_form_delta, witness_oracle


def main() -> None:
    n, witness = 3, 5
    trace = cloning_attack(witness_oracle(n, [witness]), 8, n, np.random.default_rng(4))
    eps = Fraction(1, 2 ** n)
    print(f"n={n}, one witness (eps={eps}), x of 8 bits")
    for r in trace.iterations:
        exact = closed_form_delta(eps, r.i)[0]
        print(f"  i={r.i}: alpha={r.alpha:.6f} attempts={r.attempts} delta={r.delta:.12f} closed form {exact}")
    print(f"outcome {trace.outcome} -> {trace.status}")
    s = attack_frequency(n, [witness], 8, 10000, seed=5)
    print(f"\nsuccess over {s.trials} runs: {s.rate:.4f} (exact {float(s.exact_success):.4f}, aborts {s.aborts})")


if __name__ == "__main__":
    main()
