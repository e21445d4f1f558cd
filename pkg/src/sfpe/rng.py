"""Counter-style random substreams derived from one master seed.

Every consumer of randomness asks for a stream by a tuple key, e.g.
``substream(seed, POOL, level, block)``.  The key is fed to
:class:`numpy.random.SeedSequence` as its ``spawn_key`` so streams for
distinct keys are statistically independent and a stream never depends on
how many other streams were created before it.  This is what makes pool
filling order-independent under parallel execution.

Work is split into fixed-size blocks of elements; each block owns one
stream and consumes it in a documented order.  Block sizes are part of the
reproducibility contract and are echoed into run metadata.
"""
from __future__ import annotations

import numpy as np

RandomStream = np.random.Generator

# stream purposes (first spawn-key component)
INIT = 0
LEVEL = 1
ORACLE = 2
ORACLE_LEVELS = 3
AUX = 4

POOL_BLOCK = 8192
ORACLE_BLOCK = 256

_MASK = (1 << 63) - 1


def substream(seed: int, *key: int) -> RandomStream:
    """Return the generator for ``key`` under master ``seed``."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *key: int) -> int:
    """Derive a child master seed, used to give experiment arms disjoint seeds."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(2, np.uint64)[0]) & _MASK


def blocks(total: int, size: int):
    """Yield ``(block_index, start, stop)`` covering ``range(total)``."""
    for b, start in enumerate(range(0, total, size)):
        yield b, start, min(start + size, total)


def fresh_seed() -> int:
    """Draw a seed from OS entropy (only used when nondeterminism is requested)."""
    return int(np.random.SeedSequence().generate_state(2, np.uint64)[0]) & _MASK
