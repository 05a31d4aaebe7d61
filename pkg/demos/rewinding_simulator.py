"""Walk through one run of the block-rewinding simulator.

The simulator splits the global message order into blocks.  In each block it
picks one complete commitment slot uniformly and rewinds until the verifier's
reply matches the committed bit; blocks with no complete slot get a fair coin
instead.  Each rewind decision is therefore a fair coin whatever the
adversary does, which is what the per-adversary rewind rates below show.

    python demos/rewinding_simulator.py
"""
import numpy as np

from bczklab.bczk import HonestLike, adversary_library
from bczklab.params import desk_profile
from bczklab.simulator import rewind_probability_profile, simulate


def main() -> None:
    params = desk_profile(64, 32, 10, 1)
    print(f"profile {params.label()}: threshold {params.threshold} matched slots")
    res = simulate(params, HonestLike(), np.random.default_rng(1), adversary_seed=2)
    st = res.stats
    print(f"blocks {len(res.outcomes)}, blocks holding a slot {st.n_blocks_with_slot[0]}")
    print(f"rigged matches {st.rigged_matches[0]}, lucky matches {st.lucky_matches[0]}, "
          f"total {st.total_matched[0]} -> stage 2 {'reached' if st.stage2_success[0] else 'missed'}")
    print(f"rewinds {st.rewinds}, dummy rewinds {st.dummy_rewinds}, forced continues {st.forced_continues}")
    print("\nfirst blocks (chosen slot, attempts):")
    for o in res.outcomes[:8]:
        print(f"  block {o.index:2d} segment {o.segment}: chosen {o.chosen}, attempts {o.attempts}")

    print("\nrewind rate per adversary over 1000 blocks:")
    prof = rewind_probability_profile(adversary_library(), params, 1000, seed=3)
    for name, freq in prof.frequencies.items():
        print(f"  {name:26s} {freq:.3f} over {prof.decisions[name]} decisions")
    print(f"largest pairwise difference {prof.max_pairwise_deviation:.3f}")


if __name__ == "__main__":
    main()
