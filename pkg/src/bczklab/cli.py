"""Experiment runner.

``python -m bczklab --config run.ini [--seed S] [--trials N] [--out DIR] [--workers N]``

Each run writes ``results.jsonl`` (the effective configuration on the first
line, then one record per task and one per criterion) and ``summary.csv``
(one row per criterion), plus experiment-specific per-trial CSV files.
Trials are cut into fixed-size chunks, each seeded from (seed, chunk index),
so the output does not depend on the worker count.
"""
from __future__ import annotations

import argparse
import ast
import configparser
import csv
import io
import json
import math
import re
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from pathlib import Path
from typing import Any, Callable

import mpmath
import numpy as np

from . import bczk, coinflip, ot, pok, soundness
from .params import ParameterError, ProtocolParams, check_claim_bounds, derive_params, desk_profile, full_grid
from .quantum import cloning, watrous
from .seeding import child, rng_for
from .simulator import Stage2Counts, rewind_probability_profile, stage2_counts
from .stats import binomial_ci, geometric_fit, tv_from_counts

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2
U64_MAX = (1 << 64) - 1


class ConfigError(ValueError):
    def __init__(self, section: str, key: str | None, message: str):
        where = f"[{section}]" + (f" {key}" if key else "")
        super().__init__(f"{where}: {message}")


# ------------------------------------------------------------ value parsers

def _int(lo: int | None = None, hi: int | None = None) -> Callable[[str], int]:
    def parse(s: str) -> int:
        v = int(s, 0)
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            raise ValueError(f"{v} outside [{lo}, {hi if hi is not None else 'inf'}]")
        return v
    return parse


def _num(s: str) -> float:
    """Decimal or fraction ("1/3")."""
    return float(Fraction(s.strip()))


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"expected true/false, got {s!r}")


def _int_list(s: str) -> list[int]:
    out = [int(v) for v in s.replace(",", " ").split()]
    if not out:
        raise ValueError("empty list")
    return out


def split_top(s: str) -> list[str]:
    """Split on commas outside parentheses."""
    parts, depth, cur = [], 0, []
    for ch in s:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur).strip())
    return [p for p in parts if p]


_SPEC = re.compile(r"^([A-Za-z_]\w*)\s*(?:\((.*)\))?$")


def build_spec(text: str, table: dict[str, Callable]) -> Any:
    """``Name`` or ``Name(arg, ...)`` with literal arguments, looked up in ``table``."""
    m = _SPEC.match(text.strip())
    if not m or m.group(1) not in table:
        raise ValueError(f"unknown entry {text!r} (choose from {', '.join(sorted(table))})")
    args = ast.literal_eval(f"({m.group(2)},)") if m.group(2) else ()
    return table[m.group(1)](*args)


def _spec_list(table: dict[str, Callable], allow_empty: bool = False) -> Callable[[str], list[str]]:
    def parse(s: str) -> list[str]:
        if s.strip().lower() == "none":
            if allow_empty:
                return []
            raise ValueError("at least one entry is required")
        items = split_top(s)
        for it in items:
            build_spec(it, table)
        return items
    return parse


ADVERSARIES: dict[str, Callable] = {
    "HonestLike": bczk.HonestLike, "RoundRobin": bczk.RoundRobinHonest, "FixedBits": bczk.FixedBits,
    "StateDependentScheduling": bczk.StateDependentScheduling, "SlotStaggerer": bczk.SlotStaggerer,
    "Aborter": bczk.Aborter, "AllAbortInBlock": bczk.AllAbortInBlock, "Silent": bczk.SilentAdversary,
}
PROVERS: dict[str, Callable] = {
    "Honest": pok.Honest, "Aborter": pok.Aborter, "ShareCorruptor": pok.ShareCorruptor,
    "ZeroWitness": pok.ZeroWitness, "BitLeaker": pok.BitLeaker, "CoinTape": pok.CoinTape,
    "BetaRecorder": pok.BetaRecorder, "Deterministic": pok.Deterministic,
}
RECEIVERS: dict[str, Callable] = dict(ot.RECEIVERS)
CHEATERS: dict[str, Callable] = {k: (lambda k=k: k) for k in soundness.STRATEGIES}


def _adversaries(s: str) -> list[str]:
    if s.strip().lower() == "library":
        return [a.name for a in bczk.adversary_library()]
    return _spec_list(ADVERSARIES, allow_empty=True)(s)


def _grid(s: str) -> list[tuple[int, int]]:
    """``q:lo-hi`` or ``q:lam`` entries separated by commas."""
    out = []
    for part in split_top(s):
        q, _, lams = part.partition(":")
        lo, _, hi = lams.partition("-")
        qv, lov = int(q), int(lo)
        hiv = int(hi) if hi else lov
        if qv < 1 or lov < 1 or hiv < lov:
            raise ValueError(f"bad grid entry {part!r}")
        out.extend((qv, lam) for lam in range(lov, hiv + 1))
    if not out:
        raise ValueError("empty grid")
    return out


# ------------------------------------------------------------ configuration

PROFILE_KEYS = {
    "desk": {"slots": _int(2), "blocks": _int(1), "gap": _int(1), "q": _int(1), "lam": _int(1)},
    "paper": {"q": _int(1), "lam": _int(1)},
}
EXPERIMENT_KEYS = {
    "id": str, "seed": _int(0, U64_MAX), "trials": _int(1), "out": str, "profile": str,
}


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    trials: int
    out: Path
    profile_kind: str
    params: ProtocolParams | None
    options: dict[str, Any]
    raw: dict[str, dict[str, str]] = field(default_factory=dict)

    @property
    def profile_label(self) -> str:
        return self.params.label() if self.params is not None else "none"

    def record(self) -> dict[str, Any]:
        return {
            "type": "config", "experiment": self.experiment, "seed": str(self.seed),
            "trials": self.trials, "profile": self.profile_label,
            "params": self.params.to_record() if self.params is not None else None,
            "config": self.raw,
        }


def _parse_section(name: str, sec: dict[str, str], schema: dict[str, Callable]) -> dict[str, Any]:
    for key in sec:
        if key not in schema:
            raise ConfigError(name, key, f"unknown key (expected {', '.join(schema)})")
    out = {}
    for key, parse in schema.items():
        if key not in sec:
            raise ConfigError(name, key, "missing required key")
        try:
            out[key] = parse(sec[key])
        except (ValueError, SyntaxError, TypeError) as exc:
            raise ConfigError(name, key, str(exc)) from None
    return out


def load_config(text: str, seed: int | None = None, trials: int | None = None,
                out: str | None = None) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config", None, str(exc).splitlines()[0]) from None
    raw = {s: dict(cp[s]) for s in cp.sections()}
    if "experiment" not in raw:
        raise ConfigError("experiment", None, "missing section")
    head = _parse_section("experiment", raw["experiment"], EXPERIMENT_KEYS)
    exp = head["id"]
    if exp not in EXPERIMENTS:
        raise ConfigError("experiment", "id", f"unknown experiment {exp!r} (choose from {', '.join(EXPERIMENTS)})")
    spec = EXPERIMENTS[exp]
    kind = head["profile"].strip().lower()
    if kind not in ("none", *PROFILE_KEYS):
        raise ConfigError("experiment", "profile", "must be one of none, desk, paper")
    if spec.needs_profile and kind == "none":
        raise ConfigError("experiment", "profile", f"{exp} needs a desk or paper profile")
    allowed = {"experiment", exp} | ({"profile"} if kind != "none" else set())
    for s in raw:
        if s not in allowed:
            raise ConfigError(s, None, "unknown section")
    params = None
    if kind != "none":
        if "profile" not in raw:
            raise ConfigError("profile", None, "missing section")
        pv = _parse_section("profile", raw["profile"], PROFILE_KEYS[kind])
        try:
            params = desk_profile(**pv) if kind == "desk" else derive_params(pv["q"], pv["lam"])
        except ParameterError as exc:
            raise ConfigError("profile", None, str(exc)) from None
    if exp not in raw:
        raise ConfigError(exp, None, "missing section")
    options = _parse_section(exp, raw[exp], spec.keys)
    if seed is not None:
        if not 0 <= seed <= U64_MAX:
            raise ConfigError("experiment", "seed", "must be an unsigned 64-bit integer")
        head["seed"] = seed
    if trials is not None:
        if trials < 1:
            raise ConfigError("experiment", "trials", "must be >= 1")
        head["trials"] = trials
    if out is not None:
        head["out"] = out
    return ExperimentConfig(exp, head["seed"], head["trials"], Path(head["out"]), kind, params, options, raw)


# ------------------------------------------------------------------- tasks

def _seed(path: list[int]):
    return reduce(child, path[1:], path[0])


def _chunks(total: int, size: int) -> list[tuple[int, int]]:
    """(offset, count) pairs covering ``total``."""
    return [(lo, min(size, total - lo)) for lo in range(0, total, size)]


def task_bounds(q_max: int, lam_max: int) -> dict:
    rep = check_claim_bounds(full_grid(q_max, lam_max))
    recs = [{
        "kind": "bound", "q": r.q, "lambda": r.lam, "holds": r.holds, "flags": r.flags,
        "mu_lower": str(r.mu_lower), "six_q5_lambda": r.six_q5_lambda,
    } for r in rep.records]
    return {"records": recs}


def task_tail(grid: list[list[int]], slack: float) -> dict:
    res = soundness.verify_soundness_inequality([tuple(g) for g in grid], slack)
    rows = [r.row() for r in res]
    recs = [{"kind": "tail", **row} for row in rows]
    return {"records": recs, "rows": {"tail.csv": rows}}


def task_cheat(params: dict, strategy: str, trials: int, seed: list[int]) -> dict:
    r = soundness.cheating_prover_mc(ProtocolParams.from_record(params), strategy, trials, _seed(seed))
    return {"records": [{"kind": "cheat_chunk", "strategy": strategy, "trials": r.trials, "successes": r.successes}]}


def task_stage2(params: dict, adversary: str, offset: int, trials: int, retry_cap: int, seed: list[int]) -> dict:
    rows: list[dict] = []
    c = stage2_counts(ProtocolParams.from_record(params), build_spec(adversary, ADVERSARIES), trials,
                      _seed(seed), retry_cap, rows)
    for r in rows:
        r["trial"] += offset
        r["adversary"] = adversary
    rec = {"kind": "stage2_chunk", "adversary": adversary, "offset": offset, "trials": trials,
           "successes": c.successes, "sessions": c.sessions, "forced_continues": c.forced_continues,
           "recording_violations": c.recording_violations}
    return {"records": [rec], "rows": {"sim_stats.csv": rows}}


def task_rewind(params: dict, adversary: str, blocks: int, retry_cap: int, seed: list[int]) -> dict:
    adv = build_spec(adversary, ADVERSARIES)
    prof = rewind_probability_profile([adv], ProtocolParams.from_record(params), blocks, _seed(seed), retry_cap)
    rec = {"kind": "rewind_chunk", "adversary": adversary, "rewinds": prof.rewinds[adv.name],
           "decisions": prof.decisions[adv.name], "blocks": prof.blocks[adv.name]}
    return {"records": [rec]}


def task_extract(prover: str, offset: int, trials: int, n_bits: int, lam: int, retry_cap: int,
                 paired: bool, seed: list[int]) -> dict:
    spec = build_spec(prover, PROVERS)
    rows: list[dict] = []
    rep = pok.extractability(spec, trials, _seed(seed), n_bits, lam, retry_cap,
                             keep_attempts=trials * n_bits * lam, paired=paired, rows=rows)
    for r in rows:
        r["trial"] += offset
        r["prover"] = prover
    hist = Counter(rep.attempts)
    rec = {"kind": "extract_chunk", "prover": prover, "offset": offset, "trials": trials,
           "accepted": rep.accepted, "extracted": rep.extracted, "exact_witness": rep.exact_witness,
           "max_transcript_cells": rep.max_transcript_cells, "single_pass_cells": rep.single_pass_cells,
           "attempts": {str(k): hist[k] for k in sorted(hist)}}
    return {"records": [rec], "rows": {"extraction.csv": rows}}


def task_ot_correct(lam: int, runs: int, seed: list[int]) -> dict:
    rng = rng_for(_seed(seed))
    bad = total = 0
    for m0 in (0, 1):
        for m1 in (0, 1):
            for beta in (0, 1):
                for _ in range(runs):
                    out, _ = ot.srot_run(m0, m1, beta, lam, rng)
                    total += 1
                    bad += out != (m1 if beta else m0)
    return {"records": [{"kind": "ot_correct", "lambda": lam, "runs": total, "errors": bad}]}


def task_ot_exact(lam: int) -> dict:
    tv = ot.receiver_privacy_tv_exact(lam)
    ref = ot.receiver_privacy_tv_closed_form(lam)
    return {"records": [{"kind": "ot_exact", "lambda": lam, "tv": str(tv), "closed_form": str(ref)}]}


def task_ot_views(lam: int, trials: int, seed: list[int]) -> dict:
    h0, h1 = ot.view_histograms(lam, trials, _seed(seed))
    return {"records": [{"kind": "ot_views_chunk", "lambda": lam, "trials": trials,
                         "h0": h0.tolist(), "h1": h1.tolist()}]}


def task_ot_game(receiver: str, trials: int, lam: int, seed: list[int]) -> dict:
    strat = build_spec(receiver, RECEIVERS)
    g = ot.sender_privacy_game(strat, trials=trials, seed=_seed(seed), lam=lam)
    return {"records": [{"kind": "ot_game_chunk", "receiver": receiver, "trials": trials,
                         "wins": list(g.wins), "completed": list(g.completed), "aborted": list(g.aborted)}]}


def task_coin_honest(trials: int, seed_len: int, seed: list[int]) -> dict:
    f = coinflip.honest_frequency(trials, _seed(seed), None, seed_len)
    return {"records": [{"kind": "coin_honest_chunk", "trials": trials, "ones": round(f * trials)}]}


def task_coin_force(side: str, index: int, trials: int, seed_len: int, seed: list[int]) -> dict:
    rng = rng_for(_seed(seed))
    if side == "p2":
        party = coinflip.p2_suite()[index]
        outs = [coinflip.coinflip_force_output(t % 2, party, rng, seed_len).output == t % 2 for t in range(trials)]
    else:
        party = coinflip.HonestP1()
        outs = [coinflip.simulate_against_p1(t % 2, party, rng, min(seed_len, 12)).forced for t in range(trials)]
    return {"records": [{"kind": "coin_force_chunk", "side": side, "party": party.name,
                         "trials": trials, "forced": int(sum(outs))}]}


def task_watrous(index: int, n_circuits: int, eps: float, p0: float, max_width: int, depth: int,
                 seed: list[int]) -> dict:
    case = watrous.random_suite(n_circuits, _seed(seed), eps, max_width, depth)[index]
    amp = watrous.watrous_amplify(case.circuit, case.n_input, p0, eps)
    res = amp.run(case.psi)
    return {"records": [{
        "kind": "watrous", "index": index, "width": case.circuit.n_qubits, "n_input": case.n_input,
        "gates": len(case.circuit.gates), "rounds": amp.rounds, "p_success": res.p_success,
        "fidelity": res.fidelity, "bound": watrous.watrous_bound(p0, eps), "failure": res.failure,
    }]}


def task_recurrence(n_max: int, seed: list[int]) -> dict:
    r = cloning.recurrence_deviation(n_max, _seed(seed))
    return {"records": [{"kind": "recurrence", "n_max": n_max, "cases": r.cases, "max_deviation": r.max_deviation}]}


def task_delta_bound(n_max: int) -> dict:
    recs = []
    for n in range(1, n_max + 1):
        d, _ = cloning.closed_form_delta(Fraction(1, 2 ** n), n)
        recs.append({"kind": "delta_bound", "n": n, "delta_n": str(d), "at_most_two_thirds": d <= Fraction(2, 3)})
    return {"records": recs}


def task_attack(n: int, witnesses: list[int], x_bits: int, trials: int, seed: list[int]) -> dict:
    s = cloning.attack_frequency(n, witnesses, x_bits, trials, _seed(seed))
    return {"records": [{"kind": "attack_chunk", "trials": trials, "successes": s.successes, "aborts": s.aborts,
                         "exact_success": str(s.exact_success)}]}


TASKS: dict[str, Callable[..., dict]] = {
    f.__name__[5:]: f for f in (
        task_bounds, task_tail, task_cheat, task_stage2, task_rewind, task_extract, task_ot_correct,
        task_ot_exact, task_ot_views, task_ot_game, task_coin_honest, task_coin_force, task_watrous,
        task_recurrence, task_delta_bound, task_attack,
    )
}


def _execute(task: tuple[str, dict]) -> dict:
    kind, args = task
    return TASKS[kind](**args)


# -------------------------------------------------------------- experiments

@dataclass(frozen=True)
class Criterion:
    name: str
    value: Any
    threshold: Any
    passed: bool


def _of(results: list[dict], kind: str) -> list[dict]:
    return [r for res in results for r in res["records"] if r["kind"] == kind]


def _plan_bounds(c: ExperimentConfig):
    return [("bounds", {"q_max": c.options["q_max"], "lam_max": c.options["lam_max"]})]


def _judge_bounds(c, results):
    recs = _of(results, "bound")
    held = sum(r["holds"] for r in recs)
    return [Criterion("all_bounds_hold", held, len(recs), held == len(recs))]


CHEAT_CHUNK = 1000


def _plan_soundness(c: ExperimentConfig):
    o = c.options
    tasks = [("tail", {"grid": [list(g) for g in o["grid"]], "slack": o["slack"]})]
    for k, strat in enumerate(o["strategies"]):
        for i, (_, n) in enumerate(_chunks(c.trials, CHEAT_CHUNK)):
            tasks.append(("cheat", {"params": c.params.to_record(), "strategy": strat, "trials": n,
                                    "seed": [c.seed, k, i]}))
    return tasks


def _judge_soundness(c, results):
    tails = _of(results, "tail")
    ok = sum(r["satisfied"] == "true" for r in tails)
    out = [Criterion("tail_below_chernoff", ok, len(tails), ok == len(tails))]
    p = c.params
    with mpmath.workdps(30):
        exact = float(mpmath.exp(soundness.binom_tail_exact(p.slots, Fraction(1, 2), p.threshold))) ** p.q
    limit = exact + 3 * binomial_ci(exact, c.trials)
    for strat in c.options["strategies"]:
        wins = sum(r["successes"] for r in _of(results, "cheat_chunk") if r["strategy"] == strat)
        rate = wins / c.trials
        out.append(Criterion(f"cheat_rate[{strat}]", rate, limit, rate <= limit))
    return out


SIM_CHUNK = 50
REWIND_CHUNK = 1000


def _plan_bczk(c: ExperimentConfig):
    o = c.options
    prec = c.params.to_record()
    tasks = []
    for k, adv in enumerate(o["success_adversaries"]):
        for i, (off, n) in enumerate(_chunks(c.trials, SIM_CHUNK)):
            tasks.append(("stage2", {"params": prec, "adversary": adv, "offset": off, "trials": n,
                                     "retry_cap": o["retry_cap"], "seed": [c.seed, 0, k, i]}))
    if o["rewind_blocks"]:
        for k, adv in enumerate(o["adversaries"]):
            for i, (_, n) in enumerate(_chunks(o["rewind_blocks"], REWIND_CHUNK)):
                tasks.append(("rewind", {"params": prec, "adversary": adv, "blocks": n,
                                         "retry_cap": o["retry_cap"], "seed": [c.seed, 1, k, i]}))
    return tasks


def _judge_bczk(c, results):
    o = c.options
    out = []
    chunks = _of(results, "stage2_chunk")
    for adv in o["success_adversaries"]:
        tot = Stage2Counts(0, 0, 0, 0)
        for r in chunks:
            if r["adversary"] == adv:
                tot = tot + Stage2Counts(r["successes"], r["sessions"], r["forced_continues"],
                                         r["recording_violations"])
        out.append(Criterion(f"stage2_success[{adv}]", tot.rate, o["min_success"], tot.rate >= o["min_success"]))
        out.append(Criterion(f"forced_continues[{adv}]", tot.forced_continues, 0, tot.forced_continues == 0))
        out.append(Criterion(f"no_recording[{adv}]", tot.recording_violations, 0, tot.recording_violations == 0))
    if o["rewind_blocks"]:
        freqs = {}
        for adv in o["adversaries"]:
            rs = [r for r in _of(results, "rewind_chunk") if r["adversary"] == adv]
            freqs[adv] = sum(r["rewinds"] for r in rs) / sum(r["decisions"] for r in rs)
            dev = abs(freqs[adv] - 0.5)
            out.append(Criterion(f"rewind_frequency[{adv}]", freqs[adv], f"0.5+-{o['rewind_tolerance']}",
                                 dev <= o["rewind_tolerance"]))
        spread = max(freqs.values()) - min(freqs.values())
        out.append(Criterion("rewind_pairwise_spread", spread, o["pairwise_tolerance"],
                             spread <= o["pairwise_tolerance"]))
    return out


def _sim_summary_rows(c, results):
    rows = []
    for adv in c.options["success_adversaries"]:
        rs = [r for r in _of(results, "stage2_chunk") if r["adversary"] == adv]
        succ, sess = sum(r["successes"] for r in rs), sum(r["sessions"] for r in rs)
        rows.append({"adversary": adv, "trial": "summary", "stage2_success": _fmt(succ / sess),
                     "forced_continues": sum(r["forced_continues"] for r in rs)})
    return rows


EXTRACT_CHUNK = 250


def _plan_pok(c: ExperimentConfig):
    o = c.options
    tasks = []
    for k, prover in enumerate(o["provers"]):
        for i, (off, n) in enumerate(_chunks(c.trials, EXTRACT_CHUNK)):
            tasks.append(("extract", {"prover": prover, "offset": off, "trials": n, "n_bits": o["n_bits"],
                                      "lam": o["lam"], "retry_cap": o["retry_cap"], "paired": o["paired"],
                                      "seed": [c.seed, k, i]}))
    return tasks


def _judge_pok(c, results):
    o = c.options
    out = []
    for prover in o["provers"]:
        rs = [r for r in _of(results, "extract_chunk") if r["prover"] == prover]
        n = sum(r["trials"] for r in rs)
        acc, ext = sum(r["accepted"] for r in rs), sum(r["extracted"] for r in rs)
        exact = sum(r["exact_witness"] for r in rs)
        gap = abs(ext - acc) / n
        out.append(Criterion(f"extraction_gap[{prover}]", gap, o["max_gap"], gap <= o["max_gap"]))
        out.append(Criterion(f"exact_witness[{prover}]", exact, ext, exact == ext))
        cells = max(r["max_transcript_cells"] for r in rs)
        single = rs[0]["single_pass_cells"]
        out.append(Criterion(f"single_pass_transcript[{prover}]", cells, single, cells == single))
        if prover in o["geometric_provers"]:
            hist = Counter()
            for r in rs:
                hist.update({int(k): v for k, v in r["attempts"].items()})
            samples = np.repeat(np.array(sorted(hist), dtype=np.int64), [hist[k] for k in sorted(hist)])
            fit = geometric_fit(samples, 0.5, o["alpha"])
            out.append(Criterion(f"attempts_geometric_pvalue[{prover}]", fit.pvalue, o["alpha"], fit.pvalue >= o["alpha"]))
    return out


VIEW_CHUNK = 25000
GAME_CHUNK = 500


def _plan_ot(c: ExperimentConfig):
    o = c.options
    tasks = [("ot_correct", {"lam": lam, "runs": o["correctness_runs"], "seed": [c.seed, 0, k]})
             for k, lam in enumerate(o["correctness_lams"])]
    tasks += [("ot_exact", {"lam": lam}) for lam in o["exact_lams"]]
    tasks += [("ot_views", {"lam": o["tv_lam"], "trials": n, "seed": [c.seed, 1, i]})
              for i, (_, n) in enumerate(_chunks(c.trials, VIEW_CHUNK))]
    for k, recv in enumerate(o["receivers"]):
        tasks += [("ot_game", {"receiver": recv, "trials": n, "lam": o["game_lam"], "seed": [c.seed, 2, k, i]})
                  for i, (_, n) in enumerate(_chunks(o["game_trials"], GAME_CHUNK))]
    return tasks


def _judge_ot(c, results):
    o = c.options
    out = []
    for r in _of(results, "ot_correct"):
        out.append(Criterion(f"correctness_errors[lambda={r['lambda']}]", r["errors"], 0, r["errors"] == 0))
    for r in _of(results, "ot_exact"):
        out.append(Criterion(f"exact_tv[lambda={r['lambda']}]", r["tv"], r["closed_form"], r["tv"] == r["closed_form"]))
    views = _of(results, "ot_views_chunk")
    h0 = np.sum([r["h0"] for r in views], axis=0)
    h1 = np.sum([r["h1"] for r in views], axis=0)
    tv, _ = tv_from_counts(h0, h1)
    out.append(Criterion(f"sampled_tv[lambda={o['tv_lam']}]", tv, o["max_tv"], tv <= o["max_tv"]))
    for recv in o["receivers"]:
        rs = [r for r in _of(results, "ot_game_chunk") if r["receiver"] == recv]
        g = ot.GameResult(recv, o["game_trials"],
                          tuple(sum(r["wins"][i] for r in rs) for i in (0, 1)),
                          tuple(sum(r["completed"][i] for r in rs) for i in (0, 1)),
                          tuple(sum(r["aborted"][i] for r in rs) for i in (0, 1)))
        adv = g.advantage
        out.append(Criterion(f"sender_privacy_advantage[{recv}]", adv, o["max_advantage"],
                             not math.isnan(adv) and adv <= o["max_advantage"]))
    return out


COIN_CHUNK = 5000
FORCE_CHUNK = 500


def _plan_coin(c: ExperimentConfig):
    o = c.options
    tasks = [("coin_honest", {"trials": n, "seed_len": o["seed_len"], "seed": [c.seed, 0, i]})
             for i, (_, n) in enumerate(_chunks(c.trials, COIN_CHUNK))]
    for k in range(len(coinflip.p2_suite())):
        tasks += [("coin_force", {"side": "p2", "index": k, "trials": n, "seed_len": o["seed_len"],
                                  "seed": [c.seed, 1, k, i]})
                  for i, (_, n) in enumerate(_chunks(o["force_trials"], FORCE_CHUNK))]
    if o["p1_trials"]:
        tasks += [("coin_force", {"side": "p1", "index": 0, "trials": n, "seed_len": o["seed_len"],
                                  "seed": [c.seed, 2, i]})
                  for i, (_, n) in enumerate(_chunks(o["p1_trials"], FORCE_CHUNK))]
    return tasks


def _judge_coin(c, results):
    o = c.options
    ones = sum(r["ones"] for r in _of(results, "coin_honest_chunk"))
    f = ones / c.trials
    out = [Criterion("honest_frequency", f, f"[{o['low']}, {o['high']}]", o["low"] <= f <= o["high"])]
    groups: dict[tuple[str, str], list[int]] = {}
    for r in _of(results, "coin_force_chunk"):
        g = groups.setdefault((r["side"], r["party"]), [0, 0])
        g[0] += r["forced"]
        g[1] += r["trials"]
    for (side, party), (forced, n) in groups.items():
        out.append(Criterion(f"forced[{side}:{party}]", forced / n, 1.0, forced == n))
    return out


def _plan_watrous(c: ExperimentConfig):
    o = c.options
    eps = 2.0 ** -o["eps_log2"]
    return [("watrous", {"index": i, "n_circuits": c.trials, "eps": eps, "p0": o["p0"],
                         "max_width": o["max_width"], "depth": o["depth"], "seed": [c.seed, 0]})
            for i in range(c.trials)]


def _judge_watrous(c, results):
    recs = _of(results, "watrous")
    worst = min(r["fidelity"] for r in recs)
    bound = recs[0]["bound"]
    return [Criterion("min_fidelity", worst, bound, worst >= bound)]


ATTACK_CHUNK = 1000


def _plan_cloning(c: ExperimentConfig):
    o = c.options
    tasks = [("recurrence", {"n_max": o["recurrence_n_max"], "seed": [c.seed, 0]}),
             ("delta_bound", {"n_max": o["delta_n_max"]})]
    tasks += [("attack", {"n": o["n"], "witnesses": o["witnesses"], "x_bits": o["x_bits"], "trials": n,
                          "seed": [c.seed, 1, i]})
              for i, (_, n) in enumerate(_chunks(c.trials, ATTACK_CHUNK))]
    return tasks


def _judge_cloning(c, results):
    o = c.options
    rec = _of(results, "recurrence")[0]
    out = [Criterion("recurrence_max_deviation", rec["max_deviation"], o["recurrence_tol"],
                     rec["max_deviation"] <= o["recurrence_tol"])]
    db = _of(results, "delta_bound")
    ok = sum(r["at_most_two_thirds"] for r in db)
    out.append(Criterion("delta_n_at_most_two_thirds", ok, len(db), ok == len(db)))
    wins = sum(r["successes"] for r in _of(results, "attack_chunk"))
    rate = wins / c.trials
    out.append(Criterion("attack_success", rate, o["min_success"], rate >= o["min_success"]))
    return out


@dataclass(frozen=True)
class Experiment:
    keys: dict[str, Callable[[str], Any]]
    plan: Callable[[ExperimentConfig], list]
    judge: Callable[[ExperimentConfig, list[dict]], list[Criterion]]
    needs_profile: bool = False
    extra_rows: Callable | None = None


EXPERIMENTS: dict[str, Experiment] = {
    "bound-check": Experiment({"q_max": _int(1, 64), "lam_max": _int(1, 1024)}, _plan_bounds, _judge_bounds),
    "soundness": Experiment(
        {"grid": _grid, "strategies": _spec_list(CHEATERS), "slack": _num},
        _plan_soundness, _judge_soundness, needs_profile=True),
    "bczk-sim": Experiment(
        {"adversaries": _adversaries, "success_adversaries": _adversaries, "retry_cap": _int(1),
         "min_success": _num, "rewind_blocks": _int(0), "rewind_tolerance": _num, "pairwise_tolerance": _num},
        _plan_bczk, _judge_bczk, needs_profile=True, extra_rows=_sim_summary_rows),
    "pok-extract": Experiment(
        {"provers": _spec_list(PROVERS), "geometric_provers": _spec_list(PROVERS, allow_empty=True),
         "n_bits": _int(1, 64), "lam": _int(1, 64), "retry_cap": _int(1), "max_gap": _num, "alpha": _num,
         "paired": _bool},
        _plan_pok, _judge_pok),
    "ot-privacy": Experiment(
        {"correctness_lams": _int_list, "correctness_runs": _int(1), "exact_lams": _int_list, "tv_lam": _int(2, 64),
         "max_tv": _num, "receivers": _spec_list(RECEIVERS), "game_trials": _int(1), "game_lam": _int(1, 64),
         "max_advantage": _num},
        _plan_ot, _judge_ot),
    "coinflip": Experiment(
        {"seed_len": _int(4, 256), "low": _num, "high": _num, "force_trials": _int(1), "p1_trials": _int(0)},
        _plan_coin, _judge_coin),
    "watrous": Experiment(
        {"eps_log2": _int(2, 60), "p0": _num, "max_width": _int(2, 20), "depth": _int(0)},
        _plan_watrous, _judge_watrous),
    "cloning-attack": Experiment(
        {"n": _int(1, 12), "witnesses": _int_list, "x_bits": _int(1), "min_success": _num,
         "recurrence_n_max": _int(1, 8), "recurrence_tol": _num, "delta_n_max": _int(1, 12)},
        _plan_cloning, _judge_cloning),
}


# ------------------------------------------------------------------ output

def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return "nan" if math.isnan(v) else format(v, ".12g")
    return str(v)


def _clean(obj: Any) -> Any:
    if isinstance(obj, float) and (math.isnan(obj) or math.isinf(obj)):
        return None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _dump(rec: dict) -> str:
    return json.dumps(_clean(rec), sort_keys=True, separators=(",", ":"))


def _csv(rows: list[dict]) -> str:
    fields: list[str] = []
    for r in rows:
        fields += [k for k in r if k not in fields]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", restval="")
    w.writeheader()
    w.writerows({k: _fmt(v) for k, v in r.items()} for r in rows)
    return buf.getvalue()


SUMMARY_FIELDS = ("experiment", "profile", "seed", "trials", "criterion", "value", "threshold", "pass")


@dataclass
class RunOutcome:
    config: ExperimentConfig
    criteria: list[Criterion]
    files: dict[str, Path]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> RunOutcome:
    spec = EXPERIMENTS[cfg.experiment]
    tasks = spec.plan(cfg)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_execute, tasks))
    else:
        results = [_execute(t) for t in tasks]
    criteria = spec.judge(cfg, results)

    lines = [_dump(cfg.record())]
    for (kind, args), res in zip(tasks, results):
        for rec in res["records"]:
            lines.append(_dump({"type": "task", "task": kind, **rec}))
    for c in criteria:
        lines.append(_dump({"type": "criterion", "criterion": c.name, "value": _fmt(c.value),
                            "threshold": _fmt(c.threshold), "pass": c.passed}))
    summary = [{
        "experiment": cfg.experiment, "profile": cfg.profile_label, "seed": cfg.seed, "trials": cfg.trials,
        "criterion": c.name, "value": c.value, "threshold": c.threshold, "pass": c.passed,
    } for c in criteria]
    extra: dict[str, list[dict]] = {}
    for res in results:
        for name, rows in res.get("rows", {}).items():
            extra.setdefault(name, []).extend(rows)
    if spec.extra_rows is not None and "sim_stats.csv" in extra:
        extra["sim_stats.csv"].extend(spec.extra_rows(cfg, results))

    cfg.out.mkdir(parents=True, exist_ok=True)
    files = {"results.jsonl": cfg.out / "results.jsonl", "summary.csv": cfg.out / "summary.csv"}
    files["results.jsonl"].write_text("\n".join(lines) + "\n")
    files["summary.csv"].write_text(_csv(summary))
    for name, rows in sorted(extra.items()):
        files[name] = cfg.out / name
        files[name].write_text(_csv(rows))
    return RunOutcome(cfg, criteria, files)


# --------------------------------------------------------------------- main

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _u64(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bczklab", description="Run one seeded experiment described by an INI file.")
    p.add_argument("--config", required=True, metavar="PATH", help="experiment INI file")
    p.add_argument("--seed", type=_u64, metavar="U64", help="override [experiment] seed")
    p.add_argument("--trials", type=_positive, metavar="N", help="override [experiment] trials")
    p.add_argument("--out", metavar="DIR", help="override [experiment] out")
    p.add_argument("--workers", type=_positive, default=1, metavar="N", help="worker processes (default 1)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"bczklab: error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        cfg = load_config(text, args.seed, args.trials, args.out)
    except ConfigError as exc:
        print(f"bczklab: config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        outcome = run_experiment(cfg, args.workers)
    except Exception as exc:  # noqa: BLE001 - report any failure as an execution error
        print(f"bczklab: execution error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for c in outcome.criteria:
        print(f"{'PASS' if c.passed else 'FAIL'} {cfg.experiment} {c.name} value={_fmt(c.value)} "
              f"threshold={_fmt(c.threshold)}")
    return EXIT_OK if outcome.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
