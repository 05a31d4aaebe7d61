"""Pick the Desk-profile gap used by the simulator-success configs.

Runs the block simulator against HonestLike, collects every session's
matched-slot count and reports, for each candidate gap, how often the count
reaches slots/2 + gap.  The chosen gap is the largest one whose success
frequency is at least the target.  With the defaults this prints gap 10 for
Q=1, Desk(64, 32) and gap 8 for Q=2, Desk(64, 64); those values are frozen
in configs/bczk-success-q1.ini and configs/bczk-success-q2.ini.

    python demos/select_gap.py [--trials 600] [--target 0.99]
"""
import argparse
import time

from bczklab.bczk import HonestLike
from bczklab.simulator import select_gap

SEED = 20261019


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=600)
    ap.add_argument("--target", type=float, default=0.99)
    args = ap.parse_args()
    for q, slots, blocks in [(1, 64, 32), (2, 64, 64)]:
        t0 = time.perf_counter()
        gap, rates = select_gap(slots, blocks, q, HonestLike(), args.trials, target=args.target, seed=SEED)
        print(f"Q={q} slots={slots} blocks={blocks}: gap={gap} ({time.perf_counter() - t0:.0f}s)")
        for g in range(1, 15):
            mark = " <-" if g == gap else ""
            print(f"  gap {g:2d}: P[matched >= {slots // 2 + g}] = {rates[g]:.4f}{mark}")


if __name__ == "__main__":
    main()
