"""
Population dynamics
===================

Run the bootstrap recursion for the Quicksort equation and watch the pool
settle.  The eval counter confirms the cost is exactly k * m.
"""
import numpy as np

from sfpe import SfpeMap, BranchingVectorSpec, InitialDistribution, run_population_dynamics
from sfpe.popdyn import EvalCounter

mp, spec = SfpeMap.linear(zero_mean=True), BranchingVectorSpec.quicksort()
counter = EvalCounter()
pools = run_population_dynamics(mp, spec, k=12, m=50_000, init=InitialDistribution.point_mass(0),
                                seed=1, threads=4, counter=counter)
for pool in pools[::3]:
    v = pool.values
    print(f"level {pool.level:2d}: mean {v.mean():+.4f}  sd {v.std():.4f}  "
          f"q05 {np.quantile(v, 0.05):+.3f}  q95 {np.quantile(v, 0.95):+.3f}")
print("map evaluations:", counter.count, "= k * m =", 12 * 50_000)

# the pool variance approaches 7 - 2 pi^2 / 3, the variance of the Quicksort limit
print("limit variance 7 - 2 pi^2/3 =", round(7 - 2 * np.pi**2 / 3, 4))

# same seed, different thread count: identical pools
again = run_population_dynamics(mp, spec, 12, 50_000, seed=1, keep="last")[0]
print("thread invariant:", np.array_equal(again.values, pools[-1].values))
