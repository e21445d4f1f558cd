"""Exact sampling of the depth-k recursion on a weighted branching process.

A draw builds the random tree down to generation ``k``, puts i.i.d. initial
values on the generation-``k`` leaves and folds the map upward.  The path
weights are implicit in the fold and never stored.  Cost grows like
``(E[N])^k`` per draw, which is what the population dynamics engine avoids;
here it serves as the ground truth at small ``k``.

Two routes are provided: :func:`sample_exact` evaluates one tree depth-first
with an explicit stack and plain floats, and :func:`sample_exact_iid` builds
blocks of trees generation by generation with numpy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .branching import BranchingVectorSpec, sample_branching_batch, sample_branching_vector
from .errors import BudgetExceededError
from .maps import SfpeMap, apply_map, apply_map_batch
from .popdyn import InitialDistribution

# target node count held in memory per block of trees
_BLOCK_NODE_TARGET = 1 << 21


@dataclass(frozen=True)
class OracleBudget:
    max_nodes: int = 10**7
    max_total_nodes: int = 10**9

    def __post_init__(self):
        if self.max_nodes < 1 or self.max_total_nodes < 1:
            raise ValueError("budgets must be positive")


def expected_tree_size(spec: BranchingVectorSpec, k: int):
    """``sum_{j<=k} E[N]^j`` when ``E[N]`` is known analytically, else ``None``."""
    mu = spec.offspring_law().mean()
    if mu is None:
        return None
    return float(k + 1) if mu == 1 else (mu ** (k + 1) - 1.0) / (mu - 1.0)


def oracle_block_size(spec, k):
    """Trees per block; a deterministic function of ``(spec, k)``."""
    size = expected_tree_size(spec, k) or 1.0
    return int(min(rngmod.ORACLE_BLOCK, max(1, _BLOCK_NODE_TARGET // max(1.0, size))))


class _NodeCounter:
    def __init__(self):
        self.count = 0


def sample_exact(map: SfpeMap, spec: BranchingVectorSpec, k: int,
                 init: InitialDistribution | None, rng,
                 budget: OracleBudget | None = None, counter=None) -> float:
    """One exact draw of ``R^(k)`` by depth-first evaluation.

    ``counter``, if given, receives the node count in ``counter.count``.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    init = InitialDistribution() if init is None else init
    budget = OracleBudget() if budget is None else budget
    counter = _NodeCounter() if counter is None else counter
    counter.count = 1
    if k == 0:
        return float(init.sample(rng, 1)[0])
    # frame: [realization, collected child values, depth]
    stack = [[sample_branching_vector(spec, rng), [], 0]]
    while True:
        real, vals, depth = stack[-1]
        if len(vals) < real.n:
            counter.count += 1
            if counter.count > budget.max_nodes:
                raise BudgetExceededError(
                    f"tree exceeded {budget.max_nodes} nodes", nodes=counter.count, index=0)
            if depth + 1 == k:
                vals.append(float(init.sample(rng, 1)[0]))
            else:
                stack.append([sample_branching_vector(spec, rng), [], depth + 1])
            continue
        value = apply_map(map, real, vals, level=k - depth)
        stack.pop()
        if not stack:
            return value
        stack[-1][1].append(value)


def _grow(spec, k, g, size, budget, start):
    """Sample generations ``0..k-1`` of ``size`` trees; return batches and node counts."""
    gens = []
    root_of = np.arange(size)
    nodes = np.ones(size, dtype=np.int64)
    count = size
    for _ in range(k):
        batch = sample_branching_batch(spec, count, g)
        gens.append(batch)
        root_of = root_of[batch.owner]
        nodes += np.bincount(root_of, minlength=size)
        if nodes.max() > budget.max_nodes:
            i = int(np.argmax(nodes > budget.max_nodes))
            raise BudgetExceededError(
                f"draw {start + i} exceeded {budget.max_nodes} nodes",
                nodes=int(nodes[i]), index=start + i)
        count = batch.c.size
    return gens, nodes, count


def _fold(map, gens, leaves, k):
    vals = leaves
    for d in range(len(gens) - 1, -1, -1):
        vals = apply_map_batch(map, gens[d], vals, level=k - d)
    return vals


def sample_exact_iid(map: SfpeMap, spec: BranchingVectorSpec, k: int,
                     init: InitialDistribution | None, n: int, seed: int,
                     budget: OracleBudget | None = None, *, return_node_counts=False,
                     purpose: int = rngmod.ORACLE, block_size: int | None = None):
    """``n`` independent exact draws of ``R^(k)``.

    Trees are grown in blocks; block ``b`` uses ``substream(seed, purpose, b)``.
    With ``return_node_counts`` the per-draw tree sizes are returned as well.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    init = InitialDistribution() if init is None else init
    budget = OracleBudget() if budget is None else budget
    bs = oracle_block_size(spec, k) if block_size is None else block_size
    out = np.empty(n)
    counts = np.empty(n, dtype=np.int64)
    total = 0
    for b, lo, hi in rngmod.blocks(n, bs):
        g = rngmod.substream(seed, purpose, b)
        gens, nodes, leaves = _grow(spec, k, g, hi - lo, budget, lo)
        total += int(nodes.sum())
        if total > budget.max_total_nodes:
            raise BudgetExceededError(
                f"batch exceeded {budget.max_total_nodes} total nodes", nodes=total, index=hi - 1)
        out[lo:hi] = _fold(map, gens, init.sample(g, leaves), k)
        counts[lo:hi] = nodes
    return (out, counts) if return_node_counts else out


def sample_exact_levels(map: SfpeMap, spec: BranchingVectorSpec, k: int,
                        init: InitialDistribution | None, n: int, seed: int,
                        budget: OracleBudget | None = None) -> list[np.ndarray]:
    """Exact samples of ``R^(0), ..., R^(k)`` read off the same trees.

    Draw ``i`` of level ``r`` is the fold of tree ``i`` truncated at
    generation ``r``, with initial values on every node drawn once.  Each
    level is an exact i.i.d. sample of its law; consecutive levels are
    coupled, which sharply reduces the noise of between-level distances.
    """
    init = InitialDistribution() if init is None else init
    budget = OracleBudget() if budget is None else budget
    bs = oracle_block_size(spec, k)
    out = [np.empty(n) for _ in range(k + 1)]
    total = 0
    for b, lo, hi in rngmod.blocks(n, bs):
        g = rngmod.substream(seed, rngmod.ORACLE_LEVELS, b)
        gens, nodes, leaves = _grow(spec, k, g, hi - lo, budget, lo)
        total += int(nodes.sum())
        if total > budget.max_total_nodes:
            raise BudgetExceededError(
                f"batch exceeded {budget.max_total_nodes} total nodes", nodes=total, index=hi - 1)
        sizes = [hi - lo] + [gb.c.size for gb in gens]
        base = [init.sample(g, s) for s in sizes]
        for r in range(k + 1):
            out[r][lo:hi] = _fold(map, gens[:r], base[r], r)
    return out


def node_count_samples(spec: BranchingVectorSpec, k: int, trials: int, rng) -> np.ndarray:
    """Sizes (generations ``0..k``) of ``trials`` independent trees."""
    law = spec.offspring_law()
    nodes = np.ones(trials, dtype=np.int64)
    tree = np.arange(trials)
    for _ in range(k):
        kids = law.sample(rng, tree.size).astype(np.int64)
        nodes += np.bincount(tree, weights=kids, minlength=trials).astype(np.int64)
        tree = np.repeat(tree, kids)
    return nodes


def node_count_estimate(spec: BranchingVectorSpec, k: int, trials: int, rng) -> float:
    """Expected depth-``k`` tree size; exact when ``N`` is deterministic."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    law = spec.offspring_law()
    if law.is_deterministic:
        mu = law.params[0]
        return float(sum(mu ** j for j in range(k + 1)))
    return float(node_count_samples(spec, k, trials, rng).mean())
