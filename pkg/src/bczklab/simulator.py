"""Classical block-rewinding simulator.

The global message order is cut into blocks.  For each block the simulator
plays the block against the adversary with fresh prover coins.  If the block
holds complete slots it picks one uniformly; when that slot is unmatched the
whole attempt is thrown away and the block is replayed.  A block without
complete slots is replayed on a fair coin, so the replay decision looks the
same whatever the adversary does.  Stage 2 is then proved from matched slots.
"""
from __future__ import annotations

import csv
import io
import pickle
from dataclasses import astuple, dataclass, field
from typing import Any, Sequence

import numpy as np

from .backends import HASH_PREIMAGE, IDEAL, RwiWitness
from .bczk import AdversarySpec, Prover, complete_slots, default_seed_len, matched_openings
from .engine import Engine, TranscriptSet, advance
from .params import ProtocolParams
from .seeding import child, spawn


class SimProver(Prover):
    """Prover without a witness; Stage 2 uses matched slot openings."""

    def __init__(self, params, x, seed_len, backend=IDEAL, base=HASH_PREIMAGE):
        super().__init__(params, x, None, seed_len, backend, base)

    def stage2_witness(self) -> RwiWitness:
        return RwiWitness(None, matched_openings(self, self.params.threshold))


@dataclass
class BlockOutcome:
    index: int
    chosen: tuple[int, int] | None  # (session, slot) 0-based; None for the fair coin
    attempts: int
    rewinds_wanted: int
    forced: bool
    segment: tuple[int, int]  # [lo, hi) in the final global order


@dataclass
class SimStats:
    q: int
    n_blocks_with_slot: list[int]
    rigged_matches: list[int]
    lucky_matches: list[int]
    total_matched: list[int]
    stage2_success: list[bool]
    rewind_attempts: list[int]
    dummy_rewinds: int
    forced_continues: int
    aborts: int

    CSV_FIELDS = (
        "session", "n_blocks_with_slot", "rigged_matches", "lucky_matches",
        "total_matched", "stage2_success", "blocks", "mean_attempts",
        "dummy_rewinds", "forced_continues", "aborts",
    )

    @property
    def rewind_decisions(self) -> int:
        return sum(self.rewind_attempts) + self.forced_continues

    @property
    def rewinds(self) -> int:
        return sum(a - 1 for a in self.rewind_attempts) + self.forced_continues

    def csv_rows(self) -> list[dict[str, Any]]:
        blocks = len(self.rewind_attempts)
        mean_att = sum(self.rewind_attempts) / blocks if blocks else 0.0
        rows = []
        for i in range(self.q):
            rows.append({
                "session": i + 1,
                "n_blocks_with_slot": self.n_blocks_with_slot[i],
                "rigged_matches": self.rigged_matches[i],
                "lucky_matches": self.lucky_matches[i],
                "total_matched": self.total_matched[i],
                "stage2_success": int(self.stage2_success[i]),
                "blocks": blocks,
                "mean_attempts": f"{mean_att:.6f}",
                "dummy_rewinds": self.dummy_rewinds,
                "forced_continues": self.forced_continues,
                "aborts": self.aborts,
            })
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(self.csv_rows())
        return buf.getvalue()


@dataclass
class SimResult:
    transcript: TranscriptSet
    stats: SimStats
    outcomes: list[BlockOutcome]
    provers: list[SimProver] = field(repr=False)
    driver: Any = field(repr=False, default=None)


def simulate(
    params: ProtocolParams, adversary: AdversarySpec, rng: np.random.Generator, *,
    retry_cap: int = 40, adversary_seed: Any = 0, x: bytes | None = None,
    seed_len: int | None = None, selection: str = "slot",
) -> SimResult:
    """Simulate ``params.q`` sessions against ``adversary``.

    ``rng`` supplies every simulator coin (prover randomness, slot choice,
    fair coins); it is never rolled back.  The adversary's own randomness is
    derived from ``adversary_seed`` and is restored on each replay.
    ``selection`` is ``"slot"`` (uniform over all complete slots in the
    block) or ``"session"`` (uniform session first, then a slot of it).
    """
    if retry_cap < 1:
        raise ValueError("retry_cap must be >= 1")
    if selection not in ("slot", "session"):
        raise ValueError("selection must be 'slot' or 'session'")
    n = seed_len if seed_len is not None else default_seed_len(params)
    if x is None:
        x = HASH_PREIMAGE.sample_false(np.random.default_rng(spawn(adversary_seed, 2)[1]))
    provers = [SimProver(params, x, n) for _ in range(params.q)]
    engine = Engine(provers, params.prot_len)
    driver = adversary.build(params, x, adversary_seed, n)

    outcomes: list[BlockOutcome] = []
    dummy = forced = 0
    L, bl = params.blocks, params.block_len
    for b in range(L):
        lo = b * bl
        hi = lo + bl if b < L - 1 else None
        snapshot = pickle.dumps((engine, driver), protocol=pickle.HIGHEST_PROTOCOL)
        attempts = 0
        wanted = 0
        while True:
            attempts += 1
            if attempts > 1:
                engine, driver = pickle.loads(snapshot)
            advance(engine, driver, rng, stop_at=hi)
            end = len(engine.events) if hi is None else min(hi, len(engine.events))
            slots = complete_slots(engine.events, lo, end, params.slots, with_bits=True)
            chosen = None
            if slots:
                s, j, vbit = _pick(slots, rng, selection)
                chosen = (s, j)
                # the verifier bit is read off the transcript: the prover may
                # not have processed it yet if it closed the block
                rewind = engine.machines[s]._slots[j].bit != vbit
            else:
                rewind = bool(rng.integers(2))
            if not rewind:
                break
            wanted += 1
            if chosen is None:
                dummy += 1
            if attempts >= retry_cap:
                forced += 1
                break
        outcomes.append(BlockOutcome(b, chosen, attempts, wanted, attempts >= retry_cap and rewind, (lo, end)))

    # the final block may stop before the driver is done if the last message
    # landed exactly on a boundary; drain so every session is resolved
    advance(engine, driver, rng)
    tr = engine.transcript()
    provers = engine.machines
    stats = _stats(params, tr, provers, outcomes, dummy, forced, engine)
    return SimResult(tr, stats, outcomes, provers, driver)


def _pick(slots: Sequence[tuple[int, int]], rng: np.random.Generator, selection: str):
    if selection == "slot":
        return slots[int(rng.integers(len(slots)))]
    sessions = sorted({s for s, _ in slots})
    s = sessions[int(rng.integers(len(sessions)))]
    mine = [t for t in slots if t[0] == s]
    return mine[int(rng.integers(len(mine)))]


def _stats(params, tr, provers, outcomes, dummy, forced, engine) -> SimStats:
    q = params.q
    n_blocks = [0] * q
    for o in outcomes:
        lo, hi = o.segment
        for s in {s for s, _ in complete_slots(tr.events, lo, hi, params.slots)}:
            n_blocks[s] += 1
    chosen_by_session: list[set[int]] = [set() for _ in range(q)]
    for o in outcomes:
        if o.chosen is not None and not o.forced:
            chosen_by_session[o.chosen[0]].add(o.chosen[1])
    rigged, lucky, total, success = [], [], [], []
    for i, p in enumerate(provers):
        matched = {j for j, (s, v) in enumerate(zip(p._slots, p._vbits)) if s.bit == v}
        rigged.append(len(matched & chosen_by_session[i]))
        lucky.append(len(matched - chosen_by_session[i]))
        total.append(len(matched))
        success.append(bool(p.stage2_witness_ok))
    return SimStats(
        q, n_blocks, rigged, lucky, total, success,
        [o.attempts for o in outcomes], dummy, forced, sum(engine.dead),
    )


def recount_blocks_with_slot(tr: TranscriptSet, params: ProtocolParams) -> list[int]:
    """N_i recomputed straight from the transcript blocks."""
    out = [0] * params.q
    L, bl = params.blocks, params.block_len
    for b in range(L):
        lo = b * bl
        hi = lo + bl if b < L - 1 else len(tr.events)
        for s in {s for s, _ in complete_slots(tr.events, lo, hi, params.slots)}:
            out[s] += 1
    return out


# ------------------------------------------------------------ experiments

@dataclass
class RewindProfile:
    frequencies: dict[str, float]
    decisions: dict[str, int]
    blocks: dict[str, int]
    rewinds: dict[str, int] = field(default_factory=dict)

    @property
    def max_pairwise_deviation(self) -> float:
        v = list(self.frequencies.values())
        return max(v) - min(v) if v else 0.0

    @property
    def max_deviation_from_half(self) -> float:
        return max(abs(f - 0.5) for f in self.frequencies.values())


def rewind_probability_profile(
    adversary_suite: Sequence[AdversarySpec], params: ProtocolParams, min_blocks: int,
    seed: Any = 0, retry_cap: int = 40,
) -> RewindProfile:
    """Run simulations until each strategy has at least ``min_blocks`` blocks
    and report the fraction of replay decisions that said "replay"."""
    freqs, decs, blks, rws = {}, {}, {}, {}
    for k, adv in enumerate(adversary_suite):
        ss = child(seed, k)
        rewinds = decisions = blocks = 0
        trial = 0
        while blocks < min_blocks:
            sim_ss, adv_ss = spawn(child(ss, trial), 2)
            res = simulate(params, adv, np.random.default_rng(sim_ss), retry_cap=retry_cap, adversary_seed=adv_ss)
            rewinds += res.stats.rewinds
            decisions += res.stats.rewind_decisions
            blocks += len(res.outcomes)
            trial += 1
        freqs[adv.name] = rewinds / decisions
        decs[adv.name] = decisions
        blks[adv.name] = blocks
        rws[adv.name] = rewinds
    return RewindProfile(freqs, decs, blks, rws)


@dataclass
class ClaimSummary:
    trials: int
    mean_n_blocks: list[float]
    min_n_blocks: list[int]
    mean_rigged: list[float]
    min_rigged: list[int]
    mean_lucky: list[float]
    lucky_rate: float  # matched fraction among never-chosen slots
    stage2_success_rate: list[float]
    forced_continues: int


def claim_stats(
    params: ProtocolParams, adversary: AdversarySpec, trials: int, seed: Any = 0,
    retry_cap: int = 40, selection: str = "slot",
) -> ClaimSummary:
    q = params.q
    nb = np.zeros((trials, q), dtype=np.int64)
    rg = np.zeros((trials, q), dtype=np.int64)
    lk = np.zeros((trials, q), dtype=np.int64)
    ok = np.zeros((trials, q), dtype=bool)
    lucky_slots = 0
    unchosen = 0
    forced = 0
    for t in range(trials):
        sim_ss, adv_ss = spawn(child(seed, t), 2)
        res = simulate(params, adversary, np.random.default_rng(sim_ss), retry_cap=retry_cap,
                       adversary_seed=adv_ss, selection=selection)
        st = res.stats
        nb[t], rg[t], lk[t], ok[t] = st.n_blocks_with_slot, st.rigged_matches, st.lucky_matches, st.stage2_success
        forced += st.forced_continues
        lucky_slots += sum(st.lucky_matches)
        unchosen += sum(len(p._slots) for p in res.provers) - sum(st.rigged_matches)
    return ClaimSummary(
        trials,
        nb.mean(axis=0).tolist(), nb.min(axis=0).tolist(),
        rg.mean(axis=0).tolist(), rg.min(axis=0).tolist(),
        lk.mean(axis=0).tolist(),
        lucky_slots / unchosen if unchosen else float("nan"),
        ok.mean(axis=0).tolist(),
        forced,
    )


@dataclass(frozen=True)
class Stage2Counts:
    successes: int
    sessions: int
    forced_continues: int
    recording_violations: int

    def __add__(self, other: "Stage2Counts") -> "Stage2Counts":
        return Stage2Counts(*(a + b for a, b in zip(astuple(self), astuple(other))))

    @property
    def rate(self) -> float:
        return self.successes / self.sessions if self.sessions else float("nan")


def stage2_counts(
    params: ProtocolParams, adversary: AdversarySpec, trials: int, seed: Any = 0, retry_cap: int = 40,
    rows: list[dict[str, Any]] | None = None,
) -> Stage2Counts:
    """Stage-2 successes over every session of ``trials`` simulations.  Per
    session CSV rows are appended to ``rows`` when given."""
    succ = forced = bad = 0
    for t in range(trials):
        sim_ss, adv_ss = spawn(child(seed, t), 2)
        res = simulate(params, adversary, np.random.default_rng(sim_ss), retry_cap=retry_cap, adversary_seed=adv_ss)
        succ += sum(res.stats.stage2_success)
        forced += res.stats.forced_continues
        bad += not no_recording_holds(res)
        if rows is not None:
            rows.extend({"trial": t, **r} for r in res.stats.csv_rows())
    return Stage2Counts(succ, params.q * trials, forced, bad)


def stage2_success_rate(
    params: ProtocolParams, adversary: AdversarySpec, trials: int, seed: Any = 0, retry_cap: int = 40,
) -> tuple[float, int, int]:
    """(success frequency over all sessions, forced continues, no-recording violations)."""
    c = stage2_counts(params, adversary, trials, seed, retry_cap)
    return c.rate, c.forced_continues, c.recording_violations


def no_recording_holds(res: SimResult) -> bool:
    """Final transcript is exactly one segment per block, nothing left over
    from discarded attempts."""
    segs = [o.segment for o in res.outcomes]
    covered = sum(max(0, hi - lo) for lo, hi in segs)
    contiguous = all(segs[i][1] <= segs[i + 1][0] or segs[i + 1][0] >= len(res.transcript.events)
                     for i in range(len(segs) - 1))
    steps = [e.step for e in res.transcript.events]
    monotone = all(a <= b for a, b in zip(steps, steps[1:]))
    per_session_ok = all(
        all(a.round < b.round for a, b in zip(evs, evs[1:]) if a.round is not None and b.round is not None)
        for evs in res.transcript.per_session()
    )
    return covered == len(res.transcript.events) and contiguous and monotone and per_session_ok


def select_gap(
    slots: int, blocks: int, q: int, adversary: AdversarySpec, trials: int,
    target: float = 0.99, seed: Any = 0, retry_cap: int = 40,
) -> tuple[int | None, dict[int, float]]:
    """Largest gap whose stage-2 success frequency reaches ``target``.

    The matched counts do not depend on the threshold, so one batch of
    simulations is scored against every candidate gap.
    """
    from .params import desk_profile

    base = desk_profile(slots, blocks, 1, q)
    totals: list[int] = []
    for t in range(trials):
        sim_ss, adv_ss = spawn(child(seed, t), 2)
        res = simulate(base, adversary, np.random.default_rng(sim_ss), retry_cap=retry_cap, adversary_seed=adv_ss)
        totals.extend(res.stats.total_matched)
    arr = np.asarray(totals)
    rates = {g: float(np.mean(arr >= slots // 2 + g)) for g in range(1, slots // 2)}
    ok = [g for g, r in rates.items() if r >= target]
    return (max(ok) if ok else None), rates
