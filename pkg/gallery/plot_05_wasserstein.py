"""
Wasserstein distances in one dimension
======================================

Distances between empirical laws via the quantile coupling, checked
against a brute-force Riemann sum, plus the quantile tail bound.
"""
import numpy as np

from sfpe import EmpiricalDistribution, quantile, wasserstein_p
from sfpe.wasserstein import quantile_tail_bound_check, riemann_pp, wasserstein_pp

print(wasserstein_p([0, 2], [1, 3], 1), wasserstein_p([0], [0, 1], 1))
ed = EmpiricalDistribution([3, 1, 2])
print("quantiles at 1/3, 1/2:", quantile(ed, 1 / 3), quantile(ed, 0.5))

rng = np.random.default_rng(3)
a, b = rng.normal(size=700), rng.normal(0.5, 1.5, size=1300)
for p in (1, 2, 3):
    exact = wasserstein_pp(a, b, p)
    print(f"p={p}: merge {exact:.6f}  riemann {riemann_pp(a, b, p):.6f}")

# d_1 <= d_2 <= d_3
print([round(wasserstein_p(a, b, p), 4) for p in (1, 2, 3)])

rep = quantile_tail_bound_check(EmpiricalDistribution(rng.standard_cauchy(500)), 2)
print("tail bound holds:", rep.holds, " min slack", round(rep.min_slack, 4))
