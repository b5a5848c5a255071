"""Seeded, splittable, counter-based random streams (numpy Philox)."""
from __future__ import annotations

import numpy as np


def seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def generator(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed_sequence(seed)))


def spawn(seed, n: int) -> list[np.random.SeedSequence]:
    """``n`` independent child streams; the same parent always yields the same children."""
    ss = seed_sequence(seed)
    return [np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (i,)) for i in range(n)]


def child(seed, *key: int) -> np.random.SeedSequence:
    """The stream at path ``key`` below ``seed``; independent of how many others were drawn."""
    ss = seed_sequence(seed)
    return np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + tuple(int(k) for k in key))
