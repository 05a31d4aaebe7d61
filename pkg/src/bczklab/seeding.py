"""Seed plumbing: every component derives its streams from a SeedSequence.

``spawn`` is stateless: asking twice for the children of the same seed gives
the same children, unlike ``SeedSequence.spawn``.
"""
from __future__ import annotations

from typing import Any

import numpy as np


def seedseq(seed: Any) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def spawn(seed: Any, n: int) -> list[np.random.SeedSequence]:
    ss = seedseq(seed)
    return [
        np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (i,), pool_size=ss.pool_size)
        for i in range(n)
    ]


def rng_for(seed: Any) -> np.random.Generator:
    return np.random.default_rng(seedseq(seed))


def child(seed: Any, i: int) -> np.random.SeedSequence:
    """The i-th child of ``seed`` (same as ``spawn(seed, i + 1)[i]``)."""
    ss = seedseq(seed)
    return np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (i,), pool_size=ss.pool_size)
