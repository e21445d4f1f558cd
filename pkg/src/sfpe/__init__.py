"""Population dynamics sampling for stochastic fixed-point equations.

The main entry points are :func:`run_population_dynamics` (the bootstrap
engine), :func:`sample_exact_iid` (the exact branching-process sampler),
:func:`wasserstein_p` and the experiment drivers in :mod:`sfpe.diagnostics`.
"""
__version__ = "0.1.0"

from .branching import BranchingRealization, BranchingVectorSpec, Kind, Law, validate_spec
from .errors import BudgetExceededError, ConfigError, DomainError, NumericOverflowError, SfpeError
from .maps import Family, SfpeMap, apply_map, closed_form_Hp, phi
from .popdyn import InitialDistribution, SamplePool, pool_to_empirical, run_population_dynamics
from .wasserstein import EmpiricalDistribution, quantile, wasserstein_p
from .wbp import OracleBudget, sample_exact, sample_exact_iid

__all__ = [
    "BranchingRealization", "BranchingVectorSpec", "Kind", "Law", "validate_spec",
    "BudgetExceededError", "ConfigError", "DomainError", "NumericOverflowError", "SfpeError",
    "Family", "SfpeMap", "apply_map", "closed_form_Hp", "phi",
    "InitialDistribution", "SamplePool", "pool_to_empirical", "run_population_dynamics",
    "EmpiricalDistribution", "quantile", "wasserstein_p",
    "OracleBudget", "sample_exact", "sample_exact_iid",
]
