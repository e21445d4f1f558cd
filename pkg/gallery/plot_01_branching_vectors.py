"""
Branching vectors
=================

Every recursion is driven by a random vector ``(Q, N, C_1..C_N)``.  This
script samples the built-in drivers and checks a few of their moments.
"""
import numpy as np

from sfpe import BranchingVectorSpec, Law, validate_spec
from sfpe.branching import mean_offspring, sample_branching_batch

rng = np.random.default_rng(0)

# Quicksort: N = 2, C = (U, 1 - U), Q has mean zero
qs = BranchingVectorSpec.quicksort()
b = sample_branching_batch(qs, 100_000, rng)
print("quicksort  E[Q] =", round(b.q.mean(), 4), " E[C1 + C2] =", b.c.reshape(-1, 2).sum(1).mean())

# Ising tree: Poisson degrees, constant weights tanh(beta), random field
ising = BranchingVectorSpec.ising(0.4, mean_degree=3.0, field=0.1, field_spread=0.2)
b = sample_branching_batch(ising, 100_000, rng)
print("ising      E[N] =", round(b.n.mean(), 3), " weight =", b.c[0])

# a user-defined driver built from the law grammar
custom = BranchingVectorSpec.from_text("""
kind = custom
n_law = geometric(0.4)
c_law = uniform(-0.5, 0.5)
q_law = bernoulli(0.3)
""")
print("custom     E[N] ~", round(mean_offspring(custom, 200_000, rng), 3), "(exact 1.5)")
print(custom.to_text())

# validation reports problems instead of sampling nonsense
print(validate_spec(BranchingVectorSpec.ising(-1.0)).messages)
print(validate_spec(BranchingVectorSpec.custom(Law.poisson(2), Law.constant(1), Law.constant(0))).ok)
