"""Population dynamics: the level-by-level bootstrap recursion.

Pool ``j`` is built from ``m`` fresh branching realizations whose children
are drawn uniformly with replacement from pool ``j - 1``.  Each level is cut
into blocks of :data:`sfpe.rng.POOL_BLOCK` elements; block ``b`` of level
``j`` consumes the stream ``substream(seed, LEVEL, j, b)`` in the order

1. ``sample_branching_batch`` for the block's elements,
2. resample indices for every child slot of the block.

Level 0 blocks use ``substream(seed, INIT, b)``.  Because streams are keyed
rather than sequential, the pools do not depend on the number of worker
threads.
"""
from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .branching import BranchingVectorSpec, Law, sample_branching_batch, validate_spec
from .errors import ConfigError, NumericOverflowError
from .maps import SfpeMap, apply_map_batch
from .wasserstein import EmpiricalDistribution


@dataclass(frozen=True)
class InitialDistribution:
    """Law of the level-0 pool (defaults to the point mass at zero)."""

    law: Law = field(default_factory=lambda: Law.constant(0.0))

    @classmethod
    def point_mass(cls, x0=0.0):
        return cls(Law.constant(x0))

    @classmethod
    def uniform(cls, a, b):
        return cls(Law.uniform(a, b))

    def sample(self, rng, size):
        return self.law.sample(rng, size)

    def abs_moment(self, p):
        return self.law.abs_moment(p)

    @property
    def label(self):
        return self.law.to_text() if self.law.kind != "function" else "function"


@dataclass(frozen=True)
class PoolMeta:
    map: str
    spec: str
    m: int
    seed: int


@dataclass(frozen=True)
class SamplePool:
    level: int
    values: np.ndarray
    meta: PoolMeta

    def __post_init__(self):
        self.values.flags.writeable = False

    @property
    def m(self):
        return self.values.size

    def __len__(self):
        return self.values.size


class EvalCounter:
    """Counts map evaluations (one per produced pool element at levels >= 1)."""

    def __init__(self):
        self.count = 0
        self._lock = threading.Lock()

    def add(self, n):
        with self._lock:
            self.count += int(n)


def resample_indices(m: int, count: int, rng) -> np.ndarray:
    """``count`` i.i.d. uniform indices into a pool of size ``m``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return rng.integers(0, m, size=count)


def initial_pool(init: InitialDistribution, m: int, seed: int, threads: int = 1) -> np.ndarray:
    parts = _run_blocks(m, threads,
                        lambda b, lo, hi: init.sample(rngmod.substream(seed, rngmod.INIT, b), hi - lo))
    return _finite(np.concatenate(parts), 0)


def level_branching(spec, m, seed, level, block):
    """Re-create the branching realizations used by block ``block`` of ``level``.

    Test harnesses use this to compare pools against the exact ``Q`` draws.
    """
    lo = block * rngmod.POOL_BLOCK
    size = min(rngmod.POOL_BLOCK, m - lo)
    return sample_branching_batch(spec, size, rngmod.substream(seed, rngmod.LEVEL, level, block))


def advance_level(map: SfpeMap, spec: BranchingVectorSpec, prev: np.ndarray, level: int,
                  seed: int, m: int | None = None, threads: int = 1,
                  counter: EvalCounter | None = None) -> np.ndarray:
    """Compute pool ``level`` from the values of pool ``level - 1``."""
    prev = np.asarray(prev, dtype=np.float64)
    m = prev.size if m is None else m
    src = prev.size

    def block(b, lo, hi):
        g = rngmod.substream(seed, rngmod.LEVEL, level, b)
        batch = sample_branching_batch(spec, hi - lo, g)
        idx = resample_indices(src, batch.c.size, g)
        out = apply_map_batch(map, batch, prev[idx], level=level, index_offset=lo)
        if counter is not None:
            counter.add(hi - lo)
        return out

    return np.concatenate(_run_blocks(m, threads, block))


def iter_population_dynamics(map, spec, k, m, init=None, seed=0, threads=1, counter=None):
    """Yield pools ``0..k`` one at a time, holding only the previous level."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if k < 0:
        raise ValueError("k must be >= 0")
    report = validate_spec(spec)
    if not report.ok:
        raise ConfigError("; ".join(report.messages))
    init = InitialDistribution() if init is None else init
    meta = PoolMeta(map.label, spec.label, m, seed)
    vals = initial_pool(init, m, seed, threads)
    yield SamplePool(0, vals, meta)
    for j in range(1, k + 1):
        vals = advance_level(map, spec, vals, j, seed, m, threads, counter)
        yield SamplePool(j, vals, meta)


def run_population_dynamics(map: SfpeMap, spec: BranchingVectorSpec, k: int, m: int,
                            init: InitialDistribution | None = None, seed: int = 0, *,
                            threads: int = 1, keep: str = "all",
                            counter: EvalCounter | None = None) -> list[SamplePool]:
    """Run the recursion and return the pools for levels ``0..k``.

    Parameters
    ----------
    map, spec
        The recursion map and the branching vector that drives it.
    k, m
        Number of levels and pool size.  Exactly ``k * m`` map evaluations
        are performed.
    init
        Law of the level-0 pool; the point mass at zero by default.
    seed
        Master seed.  Identical arguments give bit-identical pools.
    threads
        Worker threads used to fill blocks within a level.
    keep
        ``"all"`` returns every level; ``"last"`` returns only pool ``k``.
    counter
        Optional :class:`EvalCounter` incremented per map evaluation.
    """
    if keep not in ("all", "last"):
        raise ValueError("keep must be 'all' or 'last'")
    it = iter_population_dynamics(map, spec, k, m, init, seed, threads, counter)
    if keep == "all":
        return list(it)
    last = None
    for last in it:
        pass
    return [last]


def pool_to_empirical(pool: SamplePool) -> EmpiricalDistribution:
    return EmpiricalDistribution(pool.values)


def _run_blocks(total, threads, fn, size=rngmod.POOL_BLOCK):
    spans = list(rngmod.blocks(total, size))
    if threads <= 1 or len(spans) <= 1:
        return [fn(b, lo, hi) for b, lo, hi in spans]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda s: fn(*s), spans))


def _finite(vals, level):
    if not np.all(np.isfinite(vals)):
        raise NumericOverflowError("initial draw is not finite", level=level,
                                   index=int(np.argmax(~np.isfinite(vals))))
    return vals
