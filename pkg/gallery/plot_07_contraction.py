"""
Contraction between levels
==========================

Successive exact laws F_j approach the fixed point geometrically; the ratio
of consecutive distances estimates the contraction factor H_p^(1/p).
"""
import math

from sfpe import BranchingVectorSpec, Law, SfpeMap
from sfpe.diagnostics import contraction_check

cases = [("quicksort", SfpeMap.linear(True), BranchingVectorSpec.quicksort(), 1 / 3),
         ("find", SfpeMap.tree_sum(), BranchingVectorSpec.find(), 2 / 3)]
for name, mp, spec, h2 in cases:
    ratios = contraction_check(mp, spec, 2.0, 7, 50_000, seed=5)
    print(name, [round(r.ratio, 3) for r in ratios], "vs", round(math.sqrt(h2), 3))

# the Quicksort ratios climb past sqrt(1/3) at deep levels and approach
# sqrt(2/3), the constant of the zero-mean coupling (see README caveats)
print("sqrt(2/3) =", round(math.sqrt(2 / 3), 3))

# with C = 0 the levels stop moving and the ratios are flagged undefined
zero = BranchingVectorSpec.custom(Law.poisson(2.0), Law.constant(0.0), Law.uniform(0, 1))
print("degenerate:", [r.ratio for r in contraction_check(SfpeMap.linear(), zero, 2.0, 4, 5000, seed=0)])
