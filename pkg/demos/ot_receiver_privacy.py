"""How much the outer sender learns about the receiver's bit.

The sender recovers a row's secret only when every one of its lam choice bits
lands on the share, which happens with probability 2^-lam per row.  The exact
total-variation distance between the views for beta=0 and beta=1 is printed
next to its closed form h + h/2 - h^2/2 (h = 2^-lam) and a sampled estimate.

    python demos/ot_receiver_privacy.py
"""
from bczklab.ot import (
    receiver_privacy_tv, receiver_privacy_tv_closed_form, receiver_privacy_tv_exact, srot_run,
)
import numpy as np


def main() -> None:
    rng = np.random.default_rng(0)
    out, run = srot_run(0, 1, 1, 4, rng)
    print(f"receiver with beta=1 gets m1 = {out}; sender saw r={run.r}, r~={run.r_tilde}")
    print("\nlam  exact TV        closed form     sampled (1e5)")
    for lam in (2, 3, 4, 6, 8):
        exact = receiver_privacy_tv_exact(lam) if lam <= 3 else None
        est = receiver_privacy_tv(lam, 100000, seed=lam)
        cf = receiver_privacy_tv_closed_form(lam)
        ex = f"{str(exact):14s}" if exact is not None else f"{'-':14s}"
        print(f"{lam:3d}  {ex}  {float(cf):.6f}        {est.tv:.4f} +- {est.ci:.4f}")


if __name__ == "__main__":
    main()
