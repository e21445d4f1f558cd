"""
Maps and their contraction constants
====================================

The four map families evaluated on one realization, and the mean-Lipschitz
constant H_p from the closed forms and from the generic estimate.
"""
import math

from sfpe import BranchingRealization, BranchingVectorSpec, SfpeMap, apply_map
from sfpe.diagnostics import estimate_Hp, generic_Hp, rho_beta

real = BranchingRealization(q=1.0, n=2, c=(0.5, -0.25))
kids = (2.0, 4.0)
for mp in (SfpeMap.linear(), SfpeMap.max(), SfpeMap.tree_sum()):
    print(f"{mp.label:>14}: {apply_map(mp, real, kids)}")
fe = SfpeMap.free_entropy(0.5)
t = math.tanh(0.5)
print(f"{fe.label:>14}: {apply_map(fe, BranchingRealization(0.0, 2, (t, t)), kids):.6f}")

# closed forms where they are known, a Monte Carlo upper bound otherwise
cases = [("quicksort", SfpeMap.linear(True), BranchingVectorSpec.quicksort(), 2),
         ("find", SfpeMap.tree_sum(), BranchingVectorSpec.find(), 2),
         ("ising", SfpeMap.free_entropy(0.3), BranchingVectorSpec.ising(0.3), 1),
         ("pagerank_like", SfpeMap.linear(), BranchingVectorSpec.pagerank_like(), 1),
         ("quicksort p=1", SfpeMap.linear(True), BranchingVectorSpec.quicksort(), 1)]
for name, mp, spec, p in cases:
    e = estimate_Hp(mp, spec, p)
    g = generic_Hp(mp, spec, p, 100_000)
    print(f"{name:>14}: H_{p} = {e.value:.4f} ({e.method}), generic {g.value:.4f}")

print("rho_2 for quicksort =", rho_beta(BranchingVectorSpec.quicksort(), 2.0))
