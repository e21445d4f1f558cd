"""
Convergence in the pool size
============================

Compare level-k pools against a large exact reference and fit the decay
rate in m.  The bound built from the i.i.d. arm must dominate.
"""
from sfpe import BranchingVectorSpec, SfpeMap
from sfpe.diagnostics import rate_exponent, run_convergence_experiment
from sfpe.serialize import format_summary

rep = run_convergence_experiment(SfpeMap.linear(zero_mean=True), BranchingVectorSpec.quicksort(),
                                 p=1.0, k=5, m_grid=[100, 1000, 10_000], replications=10,
                                 oracle_size=100_000, seed=2024)
print(format_summary(rep))
print("predicted slope:", -rate_exponent(1.0, float("inf")))
