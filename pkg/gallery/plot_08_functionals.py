"""
Estimating functionals from a pool
==================================

Plug-in estimates of functionals ``E[h(R)]`` and quantiles of the fixed
point, read off a single population dynamics pool.
"""
import math

import numpy as np

from sfpe import BranchingVectorSpec, SfpeMap, run_population_dynamics, sample_exact_iid
from sfpe.diagnostics import FunctionalSpec, estimate_functional, estimate_quantiles

mp, spec = SfpeMap.tree_sum(), BranchingVectorSpec.find()
pool = run_population_dynamics(mp, spec, 10, 100_000, seed=4, keep="last")[0]
for name, h in (("mean", FunctionalSpec.moment(1)), ("E[R^2]", FunctionalSpec.moment(2)),
                ("P(R <= 3)", FunctionalSpec.indicator(3.0))):
    est = estimate_functional(pool, h, rng=np.random.default_rng(0))
    print(f"{name:>10}: {est.value:.4f}  (bootstrap se {est.bootstrap_se:.4f}, heuristic)")

print("quartiles:", [round(x, 4) for x in estimate_quantiles(pool, [0.25, 0.5, 0.75])])
oracle = np.sort(sample_exact_iid(mp, spec, 10, None, 20_000, seed=9))
print("oracle quartiles:", [round(float(oracle[math.ceil(u * oracle.size) - 1]), 4) for u in (0.25, 0.5, 0.75)])
