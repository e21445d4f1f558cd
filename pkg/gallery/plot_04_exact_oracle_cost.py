"""
The exact oracle and its cost
=============================

Exact draws of the depth-k recursion need a whole tree per draw, so their
cost grows like E[N]^k while population dynamics stays at k * m.
"""
import time

import numpy as np

from sfpe import BranchingVectorSpec, Law, OracleBudget, SfpeMap, sample_exact_iid
from sfpe.errors import BudgetExceededError
from sfpe.wbp import node_count_estimate

mp, spec = SfpeMap.tree_sum(), BranchingVectorSpec.find()
for k in (2, 4, 6, 8, 10):
    t0 = time.perf_counter()
    vals, nodes = sample_exact_iid(mp, spec, k, None, 2000, seed=k, return_node_counts=True)
    dt = time.perf_counter() - t0
    print(f"k={k:2d}: nodes/draw {nodes.mean():6.0f} (exact {node_count_estimate(spec, k, 1, None):6.0f})"
          f"  mean R {vals.mean():.3f}  {dt * 1e3:7.1f} ms")

# random offspring: tree sizes fluctuate around sum_j 3^j
pois = BranchingVectorSpec.custom(Law.poisson(3.0), Law.uniform(0, 0.3), Law.constant(1.0))
_, nodes = sample_exact_iid(SfpeMap.linear(), pois, 4, None, 20_000, seed=0, return_node_counts=True)
print("poisson(3), k=4: mean nodes", nodes.mean().round(1), "expected 121")

# the budget stops runaway trees
try:
    sample_exact_iid(mp, spec, 25, None, 10, seed=0, budget=OracleBudget(max_nodes=10**6))
except BudgetExceededError as exc:
    print("budget:", exc)
