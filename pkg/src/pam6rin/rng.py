"""Counter-addressable random streams.

Every draw is addressed by ``(seed, stream_id, block)``.  The Philox key holds
the 64-bit seed and the stream id; the block index occupies the second counter
word, so blocks never overlap (each may consume up to 2**64 counter values).
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# stream ids
STREAM_MONTE_CARLO = 1
STREAM_SAMPLER = 2


def generator(seed: int, stream_id: int = 0, block: int = 0) -> np.random.Generator:
    if seed < 0 or stream_id < 0 or block < 0:
        raise ValueError("seed, stream_id and block must be non-negative")
    bitgen = np.random.Philox(
        key=np.array([seed & MASK64, stream_id & MASK64], dtype=np.uint64),
        counter=np.array([0, block & MASK64, 0, 0], dtype=np.uint64),
    )
    return np.random.Generator(bitgen)


def derive_seed(seed: int, *path: int) -> int:
    """Deterministic child seed for a position in a sweep or search."""
    ss = np.random.SeedSequence(seed & MASK64, spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
