"""Reproducible random-number streams.

All randomness in the package flows from a single root seed. Components
derive independent substreams by name, so results do not depend on the
order in which components run or on how work is parallelized.
"""

from __future__ import annotations

import zlib

import numpy as np


def substream(root_seed: int, *names: str | int) -> np.random.Generator:
    """Derive an independent generator from a root seed and a stream name.

    Names may mix strings (hashed with crc32) and integers (e.g. a
    replication index). The same (seed, names) pair always yields the
    same stream.
    """
    keys = [int(root_seed) & 0xFFFFFFFFFFFFFFFF]
    for name in names:
        if isinstance(name, str):
            keys.append(zlib.crc32(name.encode("utf-8")))
        else:
            keys.append(int(name) & 0xFFFFFFFF)
    return np.random.default_rng(np.random.SeedSequence(keys))


def spawn_seed(root_seed: int, *names: str | int) -> int:
    """Derive a 32-bit integer seed (for libraries that take plain ints)."""
    return int(substream(root_seed, *names).integers(0, 2**31 - 1))
