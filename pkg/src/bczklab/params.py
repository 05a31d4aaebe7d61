"""Protocol parameters: formula-derived and scaled-down profiles, plus exact
checks of the inequality chain that drives the simulator analysis."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable


class ParameterError(ValueError):
    pass


class OutOfRangeError(ParameterError):
    pass


class Profile(str, enum.Enum):
    PAPER = "Paper"
    DESK = "Desk"


@dataclass(frozen=True)
class ProtocolParams:
    q: int
    lam: int
    slots: int
    blocks: int
    block_len: int
    prot_len: int
    threshold: int
    profile: Profile
    gap: int | None = None

    def to_record(self) -> dict[str, str]:
        rec = {
            "profile": self.profile.value,
            "q": str(self.q),
            "lambda": str(self.lam),
            "slots": str(self.slots),
            "blocks": str(self.blocks),
            "block_len": str(self.block_len),
            "prot_len": str(self.prot_len),
            "threshold": str(self.threshold),
        }
        if self.gap is not None:
            rec["gap"] = str(self.gap)
        return rec

    @classmethod
    def from_record(cls, rec: dict[str, str]) -> "ProtocolParams":
        return cls(
            q=int(rec["q"]),
            lam=int(rec["lambda"]),
            slots=int(rec["slots"]),
            blocks=int(rec["blocks"]),
            block_len=int(rec["block_len"]),
            prot_len=int(rec["prot_len"]),
            threshold=int(rec["threshold"]),
            profile=Profile(rec["profile"]),
            gap=int(rec["gap"]) if "gap" in rec else None,
        )

    def with_threshold_offset(self, m: int) -> "ProtocolParams":
        """Lower the threshold by ``m`` (used when M extra rounds share the slot budget)."""
        if not 0 <= m < self.threshold:
            raise ParameterError(f"offset {m} must lie in [0, threshold)")
        return replace(self, threshold=self.threshold - m)

    def label(self) -> str:
        if self.profile is Profile.PAPER:
            return f"Paper(q={self.q}, lambda={self.lam})"
        return f"Desk(slots={self.slots}, blocks={self.blocks}, gap={self.gap}, q={self.q})"


def derive_params(q: int, lam: int, int_bits: int | None = None) -> ProtocolParams:
    """Formula profile.  ``int_bits`` optionally bounds every field to a signed
    fixed-width integer (e.g. 64) and raises :class:`OutOfRangeError` past it."""
    if q < 1 or lam < 1:
        raise ParameterError("q and lambda must be >= 1")
    slots = 120 * q**7 * lam
    blocks = 24 * q**6 * lam
    prot_len = 3 * slots + 4
    block_len = prot_len * q // blocks
    threshold = 60 * q**7 * lam + q**4 * lam
    if int_bits is not None:
        limit = (1 << (int_bits - 1)) - 1
        for name, v in (("slots", slots), ("prot_len", prot_len), ("threshold", threshold)):
            if v > limit:
                raise OutOfRangeError(f"{name}={v} exceeds {int_bits}-bit range")
    return ProtocolParams(q, lam, slots, blocks, block_len, prot_len, threshold, Profile.PAPER)


def desk_profile(slots: int, blocks: int, gap: int, q: int, lam: int = 1) -> ProtocolParams:
    if q < 1 or lam < 1:
        raise ParameterError("q and lambda must be >= 1")
    if slots < 2 or slots % 2:
        raise ParameterError(f"slots must be even and positive (got {slots})")
    if blocks < q:
        raise ParameterError(f"blocks >= q violated ({blocks} < {q})")
    if not 1 <= gap < slots // 2:
        raise ParameterError(f"1 <= gap < slots/2 violated (gap={gap}, slots={slots})")
    prot_len = 3 * slots + 4
    block_len = prot_len * q // blocks
    if block_len < 4:
        raise ParameterError(f"block_len >= 4 violated (block_len={block_len})")
    return ProtocolParams(
        q, lam, slots, blocks, block_len, prot_len, slots // 2 + gap, Profile.DESK, gap
    )


@dataclass(frozen=True)
class BoundRecord:
    q: int
    lam: int
    mu_lower: Fraction
    six_q5_lambda: int
    rig_expectation: Fraction
    rig_target: int
    luck_expectation: Fraction
    luck_threshold: int
    flags: dict[str, bool] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return all(self.flags.values())


@dataclass
class BoundReport:
    records: list[BoundRecord]

    @property
    def holds(self) -> bool:
        return all(r.holds for r in self.records)

    def failures(self) -> list[tuple[int, int, str]]:
        return [(r.q, r.lam, k) for r in self.records for k, ok in r.flags.items() if not ok]


def _bound_record(q: int, lam: int) -> BoundRecord:
    p = derive_params(q, lam)
    # lower bound on the number of blocks holding a complete slot of one session
    mu_lower = Fraction(p.prot_len, 2) - 3 * p.blocks
    mu_lower = mu_lower / (p.block_len - 3)
    six = 6 * q**5 * lam
    rig = mu_lower / q
    rig_target = 6 * lam * q**4
    luck_exp = Fraction(p.slots - 3 * q**4 * lam, 2)
    luck_thr = 60 * q**7 * lam - 2 * q**4 * lam
    flags = {
        "coverage": mu_lower >= six,
        "rigging": rig >= rig_target,
        "luck": luck_exp >= luck_thr,
        "sum_reaches_threshold": 3 * q**4 * lam + luck_thr >= p.threshold,
        "prot_len_identity": p.prot_len == 3 * p.slots + 4,
        "block_len_identity": p.block_len == (p.prot_len * q) // p.blocks
        and p.block_len * p.blocks <= p.prot_len * q < (p.block_len + 1) * p.blocks,
        "threshold_identity": 2 * p.threshold == p.slots + 2 * q**4 * lam,
    }
    return BoundRecord(q, lam, mu_lower, six, rig, rig_target, luck_exp, luck_thr, flags)


def check_claim_bounds(grid: Iterable[tuple[int, int]]) -> BoundReport:
    return BoundReport([_bound_record(q, lam) for q, lam in grid])


def full_grid(q_max: int = 8, lam_max: int = 16) -> list[tuple[int, int]]:
    return [(q, lam) for q in range(1, q_max + 1) for lam in range(1, lam_max + 1)]
