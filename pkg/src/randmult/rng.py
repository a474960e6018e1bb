"""Seeded random streams.

Every random draw goes through a counter-based Philox generator keyed by a
tuple ``(seed, *key)``.  Trial ``t`` of experiment ``e`` uses the stream
``(seed, e, t)``, so trials can run in any order or in parallel and still
reproduce bit for bit.  Gaussian variates come from numpy's ziggurat
sampler on top of that stream.
"""
from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return stream(seed)


def label_key(label: str) -> int:
    """Stable integer key for a text label (used as the experiment id)."""
    return zlib.crc32(label.encode("utf-8"))
