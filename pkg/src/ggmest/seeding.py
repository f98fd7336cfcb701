"""Deterministic random substreams.

Every stochastic element of the package draws from its own generator,
derived from a master seed plus a purpose tag and optional integer indices.
Streams are independent of evaluation order and of how work is distributed
across workers, so results are reproducible for any worker count.
"""

from __future__ import annotations

import zlib

import numpy as np


def substream(master_seed: int, tag: str, *indices: int) -> np.random.Generator:
    """Generator for the substream keyed by ``(master_seed, tag, *indices)``."""
    if master_seed < 0:
        raise ValueError("master seed must be nonnegative")
    key = (zlib.crc32(tag.encode("utf-8")),) + tuple(int(i) for i in indices)
    if any(i < 0 for i in key[1:]):
        raise ValueError("substream indices must be nonnegative")
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=key))
